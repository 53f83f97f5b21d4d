"""Command-line front end.

Subcommands ``series``, ``sweep``, ``figure <preset>`` and ``validate``.
Settings may also come from a flat ``key = value`` config file; flags given on
the command line win over the file.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace

from .entanglement import ESD_THRESHOLD, ESD_WINDOW, BellFamilyState
from .propagator import DEFAULT_ATOL, DEFAULT_RTOL
from .reservoir import ReservoirParams
from .sweep import (
    ALIASES,
    AXES,
    DEFAULT_N_TIMES,
    DEFAULT_T_MAX,
    PRESETS,
    SweepSpec,
    axis_values,
    fmt,
    get_preset,
    run_series,
    run_sweep,
    run_validate,
    series_csv,
    sweep_series_csv,
    sweep_summary_csv,
)

log = logging.getLogger("squeezedbath")

# defaults for `series` and `sweep`; `figure` takes its physics from the preset
DEFAULTS = {
    "lambda": 10.0,
    "omega0": 10.0,
    "r": 0.2,
    "theta": math.pi / 4,
    "beta_sq": 0.5,
    "phi": 0.0,
    "family": "phi",
    "t_max": DEFAULT_T_MAX,
    "n_times": DEFAULT_N_TIMES,
    "rel_tol": DEFAULT_RTOL,
    "abs_tol": DEFAULT_ATOL,
    "esd_threshold": ESD_THRESHOLD,
    "esd_window": ESD_WINDOW,
    "seed": 0,
    "workers": 1,
}

_FLOAT_KEYS = {"lambda", "omega0", "r", "theta", "beta_sq", "phi", "t_max", "rel_tol", "abs_tol", "esd_threshold"}
_INT_KEYS = {"n_times", "esd_window", "seed", "workers", "n_cases"}
_STR_KEYS = {"family", "out", "axis", "values", "range", "preset"}
_BOOL_KEYS = {"dump_series"}
CONFIG_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | _BOOL_KEYS


class ConfigError(ValueError):
    pass


def read_config(path: str) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment, dashes in keys are allowed."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                if key in _FLOAT_KEYS:
                    out[key] = float(value)
                elif key in _INT_KEYS:
                    out[key] = int(value)
                elif key in _BOOL_KEYS:
                    out[key] = value.lower() in ("1", "true", "yes", "on")
                else:
                    out[key] = value
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def _common(parser: argparse.ArgumentParser) -> None:
    # defaults are None so that a value can be traced back to flag, config or built-in default
    p = parser.add_argument
    p("--lambda", dest="lambda", type=float, help="reservoir spectral width (units of gamma)")
    p("--omega0", type=float, help="detuning of the Lorentzian centre (units of gamma)")
    p("--r", type=float, help="squeeze strength")
    p("--theta", type=float, help="squeeze phase")
    p("--beta-sq", dest="beta_sq", type=float, help="weight beta^2 of the initial Bell-family state")
    p("--phi", type=float, help="relative phase of the initial Bell-family state")
    p("--family", choices=("phi", "psi"), help="initial Bell family")
    p("--t-max", dest="t_max", type=float, help="end of the time grid (units of 1/gamma)")
    p("--n-times", dest="n_times", type=int, help="number of grid points")
    p("--rel-tol", dest="rel_tol", type=float, help="relative tolerance of the integrators")
    p("--abs-tol", dest="abs_tol", type=float, help="absolute tolerance of the integrators")
    p("--esd-threshold", dest="esd_threshold", type=float, help="concurrence treated as zero below this")
    p("--esd-window", dest="esd_window", type=int, help="samples a zero/non-zero stretch must last")
    p("--out", help="output path (default: standard output)")
    p("--seed", type=int, help="random seed")
    p("--workers", type=int, help="parallel worker processes for sweeps")
    p("--config", help="flat key = value file; flags override it")
    p("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="squeezedbath",
        description="Qubit decoherence and two-qubit entanglement in a squeezed Lorentzian reservoir.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("series", help="one concurrence time series as CSV")
    _common(p)

    p = sub.add_parser("sweep", help="summary table (or full series) over one parameter axis")
    _common(p)
    p.add_argument("--axis", choices=AXES, help="parameter to sweep")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--range", dest="range", help="START:STOP:STEP, stop inclusive")
    group.add_argument("--values", help="comma-separated axis values")
    p.add_argument("--dump-series", dest="dump_series", action="store_true", default=None,
                   help="write every series in long format instead of the summary")

    p = sub.add_parser("figure", help="data behind one of the preset figures as long-format CSV")
    p.add_argument("preset", help="preset name, or 'list'")
    _common(p)

    p = sub.add_parser("validate", help="randomised cross-check of the two solvers")
    _common(p)
    p.add_argument("--n-cases", dest="n_cases", type=int, help="number of random cases (default 200)")
    return parser


def resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge built-in defaults, config file and explicit flags, in that order."""
    settings = dict(defaults)
    settings["_from_config"] = ()
    if args.config:
        from_file = read_config(args.config)
        settings.update(from_file)
        settings["_from_config"] = tuple(from_file)
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command", "verbose"):
            settings[key] = value
    return settings


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _tolerances(s: dict) -> dict:
    return dict(rtol=s["rel_tol"], atol=s["abs_tol"], esd_threshold=s["esd_threshold"], esd_window=s["esd_window"])


def _run_meta(s: dict) -> dict:
    return {
        "t_max": fmt(s["t_max"]),
        "n_times": s["n_times"],
        "rel_tol": fmt(s["rel_tol"]),
        "abs_tol": fmt(s["abs_tol"]),
        "esd_threshold": fmt(s["esd_threshold"]),
        "esd_window": s["esd_window"],
        "seed": s["seed"],
    }


def _params(s: dict) -> ReservoirParams:
    return ReservoirParams(lam=s["lambda"], omega0=s["omega0"], r=s["r"], theta=s["theta"])


def _initial(s: dict) -> BellFamilyState:
    return BellFamilyState.from_beta_sq(s["family"], s["beta_sq"], s["phi"])


def cmd_series(s: dict) -> int:
    res = run_series(_params(s), _initial(s), s["t_max"], s["n_times"], **_tolerances(s))
    for err in res.errors:
        log.warning("%s", err)
    _emit(series_csv(res, _run_meta(s)), s.get("out"))
    return 0


def _axis_from(s: dict) -> tuple[str, tuple[float, ...]]:
    axis = s.get("axis")
    if axis is None:
        raise ConfigError("sweep needs --axis")
    if s.get("values"):
        values = tuple(float(v) for v in str(s["values"]).split(",") if v.strip())
    elif s.get("range"):
        try:
            start, stop, step = (float(v) for v in str(s["range"]).split(":"))
        except ValueError:
            raise ConfigError(f"--range must be START:STOP:STEP, got {s['range']!r}") from None
        values = axis_values(start, stop, step)
    else:
        raise ConfigError("sweep needs --range or --values")
    return axis, values


def _write_sweep(spec: SweepSpec, s: dict, extra: dict) -> None:
    rows = run_sweep(spec, workers=s["workers"])
    meta = {**extra, **_run_meta(s)}
    text = sweep_series_csv(spec, rows, meta) if s.get("dump_series") else sweep_summary_csv(spec, rows, meta)
    _emit(text, s.get("out"))


def cmd_sweep(s: dict) -> int:
    axis, values = _axis_from(s)
    spec = SweepSpec(params=_params(s), initial=_initial(s), axis=axis, values=values,
                     t_max=s["t_max"], n_times=s["n_times"], **_tolerances(s))
    _write_sweep(spec, s, {})
    return 0


def cmd_figure(s: dict, args: argparse.Namespace) -> int:
    if s["preset"] == "list":
        names = sorted(PRESETS, key=lambda n: (len(n), n))
        lines = [f"{n:<6} {PRESETS[n].family:<4} axis={PRESETS[n].axis:<8} {PRESETS[n].note}" for n in names]
        lines += [f"{a:<6} alias of {t}" for a, t in ALIASES.items()]
        _emit("\n".join(lines) + "\n", s.get("out"))
        return 0
    preset = get_preset(s["preset"])
    spec = preset.sweep_spec(t_max=s["t_max"], n_times=s["n_times"], **_tolerances(s))
    # explicit physics flags or config keys override the preset binding
    overrides = {k: s[k] for k in ("lambda", "omega0", "r", "theta") if _given(k, args, s)}
    if overrides:
        spec = replace(spec, params=replace(spec.params, **{("lam" if k == "lambda" else k): v
                                                            for k, v in overrides.items()}))
    if any(_given(k, args, s) for k in ("family", "beta_sq", "phi")):
        fam = s["family"] if _given("family", args, s) else spec.initial.family
        bsq = s["beta_sq"] if _given("beta_sq", args, s) else spec.initial.beta**2
        phi = s["phi"] if _given("phi", args, s) else spec.initial.phi
        spec = replace(spec, initial=BellFamilyState.from_beta_sq(fam, bsq, phi))
    s = dict(s, dump_series=True)
    _write_sweep(spec, s, {"preset": preset.name})
    return 0


def _given(key: str, args: argparse.Namespace, s: dict) -> bool:
    return getattr(args, key, None) is not None or key in s["_from_config"]


def cmd_validate(s: dict) -> int:
    report = run_validate(n_cases=s.get("n_cases", 200), seed=s["seed"], t_max=s["t_max"], n_times=s["n_times"],
                          rtol=s["rel_tol"], atol=s["abs_tol"])
    _emit(report.render(), s.get("out"))
    return 0 if report.passed else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    defaults = dict(DEFAULTS)
    if args.command == "validate":
        defaults.update(t_max=5.0, n_times=51)
    try:
        s = resolve(args, defaults)
        if args.command == "series":
            return cmd_series(s)
        if args.command == "sweep":
            return cmd_sweep(s)
        if args.command == "figure":
            return cmd_figure(s, args)
        return cmd_validate(s)
    except (ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
