"""Exact single-qubit evolution through disentangled SU(2) exponentials.

The time-ordered exponentials of the coherence (J) and population (K)
generators are written as ``e^{X+ S+} e^{X0 S0} e^{X- S-}``; the six scalar
functions obey Riccati-type equations integrated here from ``X(0) = 0``.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np

from scipy.integrate import solve_ivp

from .reservoir import (
    AccumulatedDecay,
    ReservoirParams,
    accumulated_decay,
    coefficient_function,
    coefficient_tuple,
)

log = logging.getLogger(__name__)

# Hermiticity of the evolved state is only as good as the Riccati solution;
# these keep it near 1e-11 on states that stay O(1)
DEFAULT_RTOL = 1e-11
DEFAULT_ATOL = 1e-13

# exp() of anything above this overflows a double
_EXP_LIMIT = 709.0


class PropagatorSingularity(RuntimeError):
    """The disentangling functions blew up, or their exponentials overflow.

    Attributes
    ----------
    t : float
        Time ``t*`` at which the propagation broke down.
    """

    def __init__(self, t: float, reason: str = "propagator singularity"):
        super().__init__(f"{reason} at t={t:.17g}")
        self.t = t
        self.reason = reason


class _Blowup(Exception):
    def __init__(self, t):
        self.t = t


class MapOverflowError(PropagatorSingularity):
    def __init__(self, t: float):
        super().__init__(t, "map overflow")


@dataclass(frozen=True)
class RiccatiState:
    t: float
    j_plus: complex
    j_zero: complex
    j_minus: complex
    k_plus: float
    k_zero: float
    k_minus: float


@dataclass(frozen=True)
class SingleQubitMap:
    """Map elements of the exact solution, without the ``e^{-gamma_k}`` prefactor.

    ``r_map`` is the coherence transfer element ``rho10(0) -> rho01(t)``.
    """

    l: complex
    m: complex
    n: complex
    p: complex
    q: complex
    r_map: complex
    x: complex
    y: complex
    gamma_k: float
    t: float = 0.0

    @classmethod
    def identity(cls) -> SingleQubitMap:
        return cls(l=1.0, m=0.0, n=1.0, p=0.0, q=1.0, r_map=0.0, x=1.0, y=0.0, gamma_k=0.0)

    def matrix(self) -> np.ndarray:
        """4x4 superoperator (prefactor included) on ``(rho11, rho10, rho01, rho00)``."""
        s = math.exp(-self.gamma_k)
        return s * np.array(
            [
                [self.l, 0, 0, self.m],
                [0, self.x, self.y, 0],
                [0, self.r_map, self.q, 0],
                [self.p, 0, 0, self.n],
            ],
            dtype=complex,
        )


@dataclass(frozen=True)
class QubitDensity:
    """2x2 density matrix in the basis ``{|1>, |0>}``."""

    matrix: np.ndarray

    @classmethod
    def from_elements(cls, rho11, rho10, rho01, rho00) -> QubitDensity:
        return cls(np.array([[rho11, rho10], [rho01, rho00]], dtype=complex))

    @property
    def rho11(self) -> complex:
        return self.matrix[0, 0]

    @property
    def rho10(self) -> complex:
        return self.matrix[0, 1]

    @property
    def rho01(self) -> complex:
        return self.matrix[1, 0]

    @property
    def rho00(self) -> complex:
        return self.matrix[1, 1]

    def vector(self) -> np.ndarray:
        return self.matrix.reshape(4).copy()

    def trace(self) -> complex:
        return np.trace(self.matrix)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def eigenvalues(self) -> np.ndarray:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return np.linalg.eigvalsh(h)


def riccati_rhs(params: ReservoirParams):
    """Right-hand side of the six disentangling equations as ``f(t, X)``.

    State layout: ``(j+, j0, j-, k+, k0, k-)``.
    """

    def rhs(t, X):
        _, e0, ep, em, n0, np_, nm = coefficient_tuple(params, t)
        jp, j0, jm, kp, k0, km = X
        return np.array(
            [
                ep - em * jp * jp + e0 * jp,
                e0 - 2.0 * em * jp,
                em * cmath.exp(j0),
                np_ - nm * kp * kp + n0 * kp,
                n0 - 2.0 * nm * kp,
                nm * cmath.exp(k0),
            ]
        )

    return rhs


def _shifted_rhs(params: ReservoirParams):
    # j0 and k0 carry the closed-form drifts -2i*omega0*t - 2*gamma_k; the
    # integrator sees only the remainders so error control is not swamped by them
    w0 = params.omega0
    coeffs = coefficient_function(params)

    def rhs(t, Y):
        G, e0, ep, em, n0, np_, nm, gk = coeffs(t)
        jp, u0, jm, kp, v0, km = Y
        j0 = u0 - 2j * w0 * t - 2.0 * gk
        k0 = v0 - 2.0 * gk
        return np.array(
            [
                ep - em * jp * jp + e0 * jp,
                e0 + 2j * w0 + 2.0 * G - 2.0 * em * jp,
                em * cmath.exp(j0),
                np_ - nm * kp * kp + n0 * kp,
                n0 + 2.0 * G - 2.0 * nm * kp,
                nm * cmath.exp(k0),
            ]
        )

    return rhs


def integrate_riccati(
    params: ReservoirParams,
    t_grid,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> list[RiccatiState]:
    """Integrate the disentangling functions from zero and sample them on ``t_grid``.

    The exponents ``j0`` and ``k0`` are integrated relative to their
    closed-form drifts ``-2i omega0 t - 2 gamma_k(t)`` and ``-2 gamma_k(t)``;
    the returned states hold the full values.

    Raises
    ------
    PropagatorSingularity
        If the Riccati solution escapes to infinity (or ``exp(X0)`` overflows)
        before the last grid time.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d array")
    if t_grid[0] < 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be non-negative and strictly ascending")
    rhs = _shifted_rhs(params)
    # furthest time the integrator reached; locates t* when it gives up between grid points
    reached = [0.0]

    def guarded(t, X):
        reached[0] = max(reached[0], t)
        try:
            out = rhs(t, X)
        except OverflowError:
            raise _Blowup(t) from None
        if not np.all(np.isfinite(out)):
            raise _Blowup(t)
        return out

    t_end = float(t_grid[-1])
    if t_end == 0.0:
        Y = np.zeros((t_grid.size, 6), dtype=complex)
    else:
        try:
            sol = solve_ivp(guarded, (0.0, t_end), np.zeros(6, dtype=complex), method="DOP853",
                            t_eval=t_grid, rtol=rtol, atol=atol)
        except _Blowup as exc:
            raise PropagatorSingularity(exc.t) from None
        if sol.status != 0:
            raise PropagatorSingularity(float(reached[0]))
        Y = sol.y.T.copy()

    gk = np.array([accumulated_decay(params, float(t)).gamma_k for t in t_grid])
    Y[:, 1] -= 2j * params.omega0 * t_grid + 2.0 * gk
    Y[:, 4] -= 2.0 * gk
    kmax = np.abs(Y[:, 3:].imag).max() if len(Y) else 0.0
    if kmax > 1e-12:
        log.warning("population disentangling functions picked up imaginary part %.3g", kmax)
    return [
        RiccatiState(
            t=float(t),
            j_plus=complex(y[0]),
            j_zero=complex(y[1]),
            j_minus=complex(y[2]),
            k_plus=float(y[3].real),
            k_zero=float(y[4].real),
            k_minus=float(y[5].real),
        )
        for t, y in zip(t_grid, Y)
    ]


def assemble_map(state: RiccatiState, decay: AccumulatedDecay) -> SingleQubitMap:
    """Build the map elements from the disentangling functions at one time.

    Raises
    ------
    MapOverflowError
        If any of ``e^{+-k0/2}``, ``e^{+-j0/2}`` is out of floating-point range.
    """
    if abs(state.k_zero) / 2 > _EXP_LIMIT or abs(state.j_zero.real) / 2 > _EXP_LIMIT:
        raise MapOverflowError(state.t)
    ek = math.exp(state.k_zero / 2)
    ek_inv = math.exp(-state.k_zero / 2)
    ej = cmath.exp(state.j_zero / 2)
    ej_inv = cmath.exp(-state.j_zero / 2)
    kp, km = state.k_plus, state.k_minus
    jp, jm = state.j_plus, state.j_minus
    elements = dict(
        l=ek + ek_inv * kp * km,
        m=ek_inv * kp,
        n=ek_inv,
        p=ek_inv * km,
        q=ej_inv,
        r_map=ej_inv * jm,
        x=ej + ej_inv * jp * jm,
        y=ej_inv * jp,
    )
    if not all(cmath.isfinite(v) for v in elements.values()):
        raise MapOverflowError(state.t)
    return SingleQubitMap(**elements, gamma_k=decay.gamma_k, t=state.t)


def evolve_qubit(qmap: SingleQubitMap, rho0: QubitDensity) -> QubitDensity:
    """Apply the exact map (prefactor included) to a single-qubit state."""
    s = math.exp(-qmap.gamma_k)
    r11, r10, r01, r00 = rho0.rho11, rho0.rho10, rho0.rho01, rho0.rho00
    return QubitDensity.from_elements(
        s * (qmap.l * r11 + qmap.m * r00),
        s * (qmap.x * r10 + qmap.y * r01),
        s * (qmap.q * r01 + qmap.r_map * r10),
        s * (qmap.n * r00 + qmap.p * r11),
    )


def single_qubit_maps(
    params: ReservoirParams,
    t_grid,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> list[SingleQubitMap]:
    """Exact maps at every grid time; integrate and assemble in one call."""
    states = integrate_riccati(params, t_grid, rtol=rtol, atol=atol)
    return [assemble_map(s, accumulated_decay(params, s.t)) for s in states]


def evolve_algebraic(
    params: ReservoirParams,
    rho0: QubitDensity,
    t_grid,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> list[QubitDensity]:
    return [evolve_qubit(m, rho0) for m in single_qubit_maps(params, t_grid, rtol, atol)]
