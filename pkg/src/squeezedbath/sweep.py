"""Concurrence series, parameter sweeps, figure presets and oracle validation."""

from __future__ import annotations

import csv
import functools
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .entanglement import (
    ESD_THRESHOLD,
    ESD_WINDOW,
    BellFamilyState,
    ConcurrenceSeries,
    concurrence_full,
    concurrence_series,
    initial_state,
    is_x_state,
)
from .oracle import evolve_direct, superoperator_matrices
from .propagator import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    PropagatorSingularity,
    QubitDensity,
    assemble_map,
    integrate_riccati,
)
from .reservoir import ReservoirParams, accumulated_decay, correlations, squeeze_moments

log = logging.getLogger(__name__)

AXES = ("r", "theta", "beta_sq", "omega0", "lambda")
SERIES_COLUMNS = ("gamma_t", "concurrence", "trace", "min_eig", "gamma_k", "flag")

DEFAULT_T_MAX = 5.0
DEFAULT_N_TIMES = 2000

FLAG_OK = "ok"
FLAG_NONPOSITIVE = "nonpositive"
FLAG_SINGULAR = "singular"

# eigenvalues below this mark a point as non-positive
_NEG_EIG = -1e-8


def fmt(x) -> str:
    """Format a float with 17 significant digits."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class SeriesResult:
    params: ReservoirParams
    initial: BellFamilyState
    t: np.ndarray
    concurrence: np.ndarray
    trace: np.ndarray
    min_eig: np.ndarray
    gamma_k: np.ndarray
    flags: list[str]
    series: ConcurrenceSeries | None
    errors: list[str] = field(default_factory=list)

    def rows(self):
        for i in range(self.t.size):
            yield (
                fmt(self.t[i]),
                fmt(self.concurrence[i]),
                fmt(self.trace[i]),
                fmt(self.min_eig[i]),
                fmt(self.gamma_k[i]),
                self.flags[i],
            )


def time_grid(t_max: float, n_times: int) -> np.ndarray:
    if not t_max > 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")
    if n_times < 2:
        raise ValueError(f"n_times must be >= 2, got {n_times}")
    return np.linspace(0.0, t_max, n_times)


@functools.lru_cache(maxsize=32)
def _map_matrices(params: ReservoirParams, t_max: float, n_times: int, rtol: float, atol: float):
    """Prefactored 4x4 single-qubit superoperators on the grid, plus the first singular time.

    Grid points at or after a propagator singularity are NaN.
    """
    t = time_grid(t_max, n_times)
    mats = np.full((t.size, 4, 4), np.nan, dtype=complex)
    gks = np.array([accumulated_decay(params, float(s)).gamma_k for s in t])
    upto = t.size
    singular_at = None
    errors = []
    while upto > 0:
        try:
            states = integrate_riccati(params, t[:upto], rtol=rtol, atol=atol)
            for i, st in enumerate(states):
                mats[i] = assemble_map(st, accumulated_decay(params, st.t)).matrix()
            break
        except PropagatorSingularity as exc:
            if singular_at is None:
                singular_at = exc.t
                errors.append(str(exc))
            # MapOverflowError lands on a grid point; Riccati blow-up between points
            upto = min(int(np.searchsorted(t, exc.t, side="left")), upto - 1)
            mats[max(upto, 0):] = np.nan
    mats.setflags(write=False)
    return t, mats, gks, singular_at, tuple(errors)


def _joint(mats: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    # batched version of entanglement.joint_density
    S4 = mats.reshape(-1, 2, 2, 2, 2)
    R = rho0.reshape(2, 2, 2, 2)
    return np.einsum("txycw,tuvdz,cdwz->txuyv", S4, S4, R).reshape(-1, 4, 4)


def _concurrence_x_batch(rho: np.ndarray) -> np.ndarray:
    d = rho[:, np.arange(4), np.arange(4)].real
    c1 = 2.0 * (np.sqrt(np.abs(rho[:, 1, 2] * rho[:, 2, 1])) - np.sqrt(np.clip(d[:, 0] * d[:, 3], 0, None)))
    c2 = 2.0 * (np.sqrt(np.abs(rho[:, 0, 3] * rho[:, 3, 0])) - np.sqrt(np.clip(d[:, 1] * d[:, 2], 0, None)))
    return np.maximum(0.0, np.maximum(c1, c2))


def run_series(
    params: ReservoirParams,
    initial: BellFamilyState,
    t_max: float = DEFAULT_T_MAX,
    n_times: int = DEFAULT_N_TIMES,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    esd_threshold: float = ESD_THRESHOLD,
    esd_window: int = ESD_WINDOW,
) -> SeriesResult:
    """Concurrence and diagnostics on a uniform grid over ``[0, t_max]``.

    A propagator singularity does not abort the run: the points from the
    singular time onward are flagged and carry NaN values.
    """
    t, mats, gks, singular_at, errors = _map_matrices(params, float(t_max), int(n_times), rtol, atol)
    rho0 = initial_state(initial)
    valid = np.isfinite(mats).all(axis=(1, 2))
    conc = np.full(t.size, np.nan)
    trace = np.full(t.size, np.nan)
    min_eig = np.full(t.size, np.nan)
    if valid.any():
        rho = _joint(mats[valid], rho0)
        trace[valid] = np.trace(rho, axis1=1, axis2=2).real
        herm = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
        min_eig[valid] = np.linalg.eigvalsh(herm)[:, 0]
        if all(is_x_state(r) for r in rho[:: max(1, rho.shape[0] // 50)]):
            conc[valid] = _concurrence_x_batch(rho)
        else:
            conc[valid] = [concurrence_full(r) for r in rho]
    flags = []
    for i in range(t.size):
        if not valid[i]:
            flags.append(FLAG_SINGULAR)
        elif min_eig[i] < _NEG_EIG:
            flags.append(FLAG_NONPOSITIVE)
        else:
            flags.append(FLAG_OK)

    n_valid = int(np.argmin(valid)) if not valid.all() else t.size
    series = None
    if n_valid >= 2 * esd_window:
        series = concurrence_series(t[:n_valid], conc[:n_valid], esd_threshold, esd_window)
    return SeriesResult(
        params=params,
        initial=initial,
        t=t,
        concurrence=conc,
        trace=trace,
        min_eig=min_eig,
        gamma_k=gks,
        flags=flags,
        series=series,
        errors=list(errors),
    )


# --------------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepSpec:
    params: ReservoirParams
    initial: BellFamilyState
    axis: str
    values: tuple[float, ...]
    t_max: float = DEFAULT_T_MAX
    n_times: int = DEFAULT_N_TIMES
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    esd_threshold: float = ESD_THRESHOLD
    esd_window: int = ESD_WINDOW

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if len(self.values) == 0:
            raise ValueError("sweep needs at least one axis value")
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0")
        if self.n_times < 2 * self.esd_window:
            raise ValueError(f"n_times must be >= {2 * self.esd_window}")

    def point(self, value: float) -> tuple[ReservoirParams, BellFamilyState]:
        if self.axis == "beta_sq":
            return self.params, BellFamilyState.from_beta_sq(self.initial.family, value, self.initial.phi)
        name = "lam" if self.axis == "lambda" else self.axis
        return replace(self.params, **{name: value}), self.initial


def axis_values(start: float, stop: float, step: float) -> tuple[float, ...]:
    """Inclusive arithmetic range, robust to floating-point step accumulation."""
    if step <= 0:
        raise ValueError("step must be > 0")
    if stop < start:
        raise ValueError("stop must be >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(start + i * step) for i in range(n))


@dataclass
class SweepRow:
    value: float
    esd_time: float | None
    revival_count: int
    c_min_after_death: float | None
    c_max_after_death: float | None
    n_dark_intervals: int
    errors: list[str]
    result: SeriesResult | None = None


def _summarise(value: float, res: SeriesResult) -> SweepRow:
    s = res.series
    esd = s.esd_time if s else None
    cmin = cmax = None
    if s is not None and esd is not None:
        after = s.c_values[s.t_grid >= esd]
        if after.size:
            cmin, cmax = float(after.min()), float(after.max())
    return SweepRow(
        value=value,
        esd_time=esd,
        revival_count=s.revival_count if s else 0,
        c_min_after_death=cmin,
        c_max_after_death=cmax,
        n_dark_intervals=len(s.dark_intervals) if s else 0,
        errors=list(res.errors),
        result=res,
    )


def _sweep_point(spec: SweepSpec, value: float) -> SweepRow:
    try:
        params, initial = spec.point(value)
        res = run_series(params, initial, spec.t_max, spec.n_times, spec.rtol, spec.atol,
                         spec.esd_threshold, spec.esd_window)
    except Exception as exc:  # recorded per point, the sweep goes on
        log.warning("sweep point %s=%s failed: %s", spec.axis, value, exc)
        return SweepRow(value, None, 0, None, None, 0, [f"{type(exc).__name__}: {exc}"])
    return _summarise(value, res)


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """One summary row per axis value, in axis order regardless of completion order."""
    values = sorted(spec.values)
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(functools.partial(_sweep_point, spec), values))
    return [_sweep_point(spec, v) for v in values]


# --------------------------------------------------------------------------- presets


@dataclass(frozen=True)
class FigurePreset:
    name: str
    family: str
    lam: float
    omega0: float
    r: float
    theta: float
    beta_sq: float
    axis: str
    values: tuple[float, ...]
    note: str = ""

    def sweep_spec(self, **overrides) -> SweepSpec:
        params = ReservoirParams(self.lam, self.omega0, self.r, self.theta)
        initial = BellFamilyState.from_beta_sq(self.family, self.beta_sq)
        return SweepSpec(params=params, initial=initial, axis=self.axis, values=self.values, **overrides)


_THETAS = tuple(k * math.pi / 8 for k in range(16))
_BETA_SQ = axis_values(0.05, 0.95, 0.05)
_RS = axis_values(0.0, 1.5, 0.1)
_HALF = 0.5
_PI4 = math.pi / 4


def _preset(name, family, lam, omega0, axis, r=0.2, theta=_PI4, beta_sq=_HALF, note=""):
    values = {"theta": _THETAS, "beta_sq": _BETA_SQ, "r": _RS}[axis]
    return FigurePreset(name, family, lam, omega0, r, theta, beta_sq, axis, values, note)


PRESETS: dict[str, FigurePreset] = {
    p.name: p
    for p in (
        _preset("fig1", "phi", 10, 10, "theta", note="theta axis"),
        _preset("fig2a", "psi", 10, 10, "beta_sq", note="beta^2 axis"),
        _preset("fig2b", "psi", 10, 10, "theta", note="theta axis"),
        _preset("fig3", "phi", 10, 10, "r", note="r axis"),
        _preset("fig4", "psi", 10, 10, "r", note="r axis"),
        _preset("fig5", "phi", 10, 12, "beta_sq"),
        _preset("fig6", "phi", 10, 10, "beta_sq"),
        _preset("fig7", "phi", 10, 6.5, "beta_sq"),
        _preset("fig8a", "phi", 10, 3, "beta_sq", note="lambda=10 variant"),
        _preset("fig8b", "phi", 20, 3, "beta_sq", note="lambda=20 variant"),
        _preset("fig8c", "psi", 20, 2, "beta_sq", note="psi, omega0=2, lambda=20"),
        _preset("fig9", "psi", 10, 12, "beta_sq"),
        _preset("fig10", "psi", 10, 10, "beta_sq"),
        _preset("fig11", "psi", 10, 6.5, "beta_sq"),
    )
}
ALIASES = {"fig2": "fig2a", "fig8": "fig8a"}


def get_preset(name: str) -> FigurePreset:
    key = ALIASES.get(name, name)
    try:
        return PRESETS[key]
    except KeyError:
        known = ", ".join(sorted(set(PRESETS) | set(ALIASES)))
        raise KeyError(f"unknown preset {name!r}; known presets: {known}") from None


# --------------------------------------------------------------------------- CSV


def binding_lines(items: dict) -> list[str]:
    return [f"# {k} = {v}" for k, v in items.items()]


def _binding(params: ReservoirParams, initial: BellFamilyState, extra: dict) -> dict:
    out = {
        "lambda": fmt(params.lam),
        "omega0": fmt(params.omega0),
        "r": fmt(params.r),
        "theta": fmt(params.theta),
        "family": initial.family,
        "beta_sq": fmt(initial.beta**2),
        "phi": fmt(initial.phi),
    }
    out.update(extra)
    return out


def series_csv(res: SeriesResult, extra: dict | None = None) -> str:
    buf = io.StringIO()
    for line in binding_lines(_binding(res.params, res.initial, extra or {})):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    w.writerows(res.rows())
    return buf.getvalue()


def _opt(x) -> str:
    return "" if x is None else fmt(x)


def sweep_summary_csv(spec: SweepSpec, rows: list[SweepRow], extra: dict | None = None) -> str:
    buf = io.StringIO()
    bind = _binding(spec.params, spec.initial, {"axis": spec.axis, **(extra or {})})
    for line in binding_lines(bind):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([spec.axis, "esd_time", "revival_count", "c_min_after_death", "c_max_after_death",
                "n_dark_intervals", "errors"])
    for row in rows:
        w.writerow([fmt(row.value), _opt(row.esd_time), row.revival_count, _opt(row.c_min_after_death),
                    _opt(row.c_max_after_death), row.n_dark_intervals, "; ".join(row.errors)])
    return buf.getvalue()


def sweep_series_csv(spec: SweepSpec, rows: list[SweepRow], extra: dict | None = None) -> str:
    """Long-format dump: the axis value followed by the per-time series columns."""
    buf = io.StringIO()
    bind = _binding(spec.params, spec.initial, {"axis": spec.axis, **(extra or {})})
    for line in binding_lines(bind):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((spec.axis,) + SERIES_COLUMNS)
    for row in rows:
        if row.result is None:
            w.writerow([fmt(row.value), "", "", "", "", "", "error"])
            continue
        v = fmt(row.value)
        for r in row.result.rows():
            w.writerow((v,) + r)
    return buf.getvalue()


# --------------------------------------------------------------------------- validation


@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


@dataclass
class ValidationReport:
    n_cases: int
    seed: int
    t_max: float
    n_times: int
    checks: list[Check]
    info: list[tuple[str, str]]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        lines = [
            f"validation n_cases={self.n_cases} seed={self.seed} t_max={fmt(self.t_max)} n_times={self.n_times}",
            f"{'check':<34} {'max_value':>24} {'tolerance':>10}  status",
        ]
        for c in self.checks:
            lines.append(f"{c.name:<34} {c.value:>24.17g} {c.tolerance:>10.0e}  {'PASS' if c.passed else 'FAIL'}")
        for key, val in self.info:
            lines.append(f"info {key}: {val}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def _random_density(rng: np.random.Generator) -> QubitDensity:
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = g @ g.conj().T
    return QubitDensity(rho / np.trace(rho).real)


def commutator_residual() -> float:
    """Largest entry of the differences in the SU(2) commutation relations."""
    ops = superoperator_matrices()
    J0, Jp, Jm = ops.J0, ops.J_plus, ops.J_minus
    K0, Kp, Km = ops.K0, ops.K_plus, ops.K_minus

    def comm(a, b):
        return a @ b - b @ a

    residuals = [
        comm(Jm, Jp) + 2 * J0,
        comm(J0, Jp) - Jp,
        comm(J0, Jm) + Jm,
        comm(Km, Kp) + 2 * K0,
        comm(K0, Kp) - Kp,
        comm(K0, Km) + Km,
    ]
    residuals += [comm(k, j) for k in (K0, Kp, Km) for j in (J0, Jp, Jm)]
    return float(max(np.abs(r).max() for r in residuals))


def draw_case(rng: np.random.Generator):
    params = ReservoirParams(
        lam=rng.uniform(0.0, 20.0),
        omega0=rng.uniform(2.0, 15.0),
        r=rng.uniform(0.0, 1.2),
        theta=rng.uniform(0.0, 2 * math.pi),
    )
    beta_sq = rng.uniform(0.0, 1.0)
    while beta_sq == 0.0:
        beta_sq = rng.uniform(0.0, 1.0)
    family = "phi" if rng.uniform() < 0.5 else "psi"
    initial = BellFamilyState.from_beta_sq(family, beta_sq, phi=rng.uniform(0.0, 2 * math.pi))
    rho0 = _random_density(rng)
    return params, initial, rho0


def run_validate(
    n_cases: int = 200,
    seed: int = 0,
    t_max: float = 5.0,
    n_times: int = 51,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    density_tol: float = 1e-6,
) -> ValidationReport:
    """Randomised agreement of the algebraic and direct routes plus invariant checks."""
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    import warnings

    from .entanglement import StateValidityWarning, concurrence_x

    rng = np.random.default_rng(seed)
    t = time_grid(t_max, n_times)
    dev = dev_scaled = tr_err = herm_err = herm_scaled = conc_diff = conc_diff_psd = 0.0
    n_nonpositive = 0
    n_growing = n_singular = 0
    r0_gap = 0.0
    r0_moments = 0.0
    for _ in range(n_cases):
        params, initial, rho0 = draw_case(rng)
        try:
            _, mats, _, singular_at, _ = _map_matrices(params, t_max, n_times, rtol, atol)
            if singular_at is not None:
                raise PropagatorSingularity(singular_at)
            alg = [QubitDensity((m @ rho0.vector()).reshape(2, 2)) for m in mats]
        except PropagatorSingularity:
            n_singular += 1
            dev = math.inf
            continue
        direct = evolve_direct(params, rho0, t)
        case_dev = max(float(np.abs(a.matrix - d.matrix).max()) for a, d in zip(alg, direct))
        mag = max(float(np.abs(d.matrix).max()) for d in direct)
        dev = max(dev, case_dev)
        dev_scaled = max(dev_scaled, case_dev / max(1.0, mag))
        n_growing += mag > 1.0 + 1e-9
        for states in (alg, direct):
            tr_err = max(tr_err, max(abs(s.trace() - 1.0) for s in states))
            herm_err = max(herm_err, max(s.hermiticity_error() for s in states))
            herm_scaled = max(herm_scaled, max(s.hermiticity_error() for s in states) / max(1.0, mag))

        rho_ab0 = initial_state(initial)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StateValidityWarning)
            negative = False
            for rho in _joint(mats, rho_ab0):
                diff = abs(concurrence_x(rho) - concurrence_full(rho))
                conc_diff = max(conc_diff, diff)
                if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] >= 0.0:
                    conc_diff_psd = max(conc_diff_psd, diff)
                else:
                    negative = True
            n_nonpositive += negative

        # vacuum limit of the same draw
        vac = replace(params, r=0.0)
        mom = squeeze_moments(vac)
        r0_moments = max(r0_moments, abs(mom.N), abs(mom.M))
        for s in t:
            c = correlations(vac, float(s))
            r0_gap = max(r0_gap, abs(accumulated_decay(vac, float(s)).gamma_k - (c.F + c.alpha_tilde.real)))

    checks = [
        Check("density_deviation", dev, density_tol),
        Check("trace_error", tr_err, 1e-9),
        Check("hermiticity_error", herm_err, 1e-10),
        Check("concurrence_x_vs_full", conc_diff, 1e-9),
        Check("commutator_identities", commutator_residual(), 0.0),
        Check("limit_r0_gamma_k", r0_gap, 1e-12),
        Check("limit_r0_moments", r0_moments, 0.0),
    ]
    info = [
        ("density_deviation_scaled", f"{dev_scaled:.17g} (deviation / max(1, max|rho|))"),
        ("hermiticity_error_scaled", f"{herm_scaled:.17g} (asymmetry / max(1, max|rho|))"),
        ("cases_with_growing_state", f"{n_growing} of {n_cases} have max|rho| > 1"),
        ("singular_cases", str(n_singular)),
        ("cases_with_negative_eigenvalue", f"{n_nonpositive} of {n_cases} two-qubit series leave the PSD cone"),
        ("concurrence_x_vs_full_psd_only", f"{conc_diff_psd:.17g} (states with no negative eigenvalue)"),
    ]
    return ValidationReport(n_cases, seed, t_max, n_times, checks, info)
