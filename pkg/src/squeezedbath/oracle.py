"""Direct integration of the master equation as a 4x4 linear system.

Independent of the disentangling route: the same generator is built as an
explicit superoperator matrix and the vectorised density matrix is integrated
with a Dormand-Prince 5(4) stepper. Vectorisation order is ``(rho11, rho10, rho01, rho00)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rk
from .propagator import QubitDensity
from .reservoir import ReservoirParams, coefficient_function, coefficient_tuple

# basis |1> = index 0, |0> = index 1
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()


DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


class IntegrationError(RuntimeError):
    def __init__(self, t: float, message: str):
        super().__init__(f"direct integration failed at t={t:.17g}: {message}")
        self.t = t


@dataclass(frozen=True)
class Superoperators:
    J0: np.ndarray
    J_plus: np.ndarray
    J_minus: np.ndarray
    K0: np.ndarray
    K_plus: np.ndarray
    K_minus: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "J0": self.J0,
            "J+": self.J_plus,
            "J-": self.J_minus,
            "K0": self.K0,
            "K+": self.K_plus,
            "K-": self.K_minus,
        }


@dataclass(frozen=True)
class LiouvillianSample:
    t: float
    L: np.ndarray


def _as_matrix(action) -> np.ndarray:
    # column j = vec(action(E_j)) with E_j the j-th basis matrix in row-major order
    cols = []
    for j in range(4):
        basis = np.zeros(4, dtype=complex)
        basis[j] = 1.0
        cols.append(action(basis.reshape(2, 2)).reshape(4))
    return np.array(cols).T


def superoperator_matrices() -> Superoperators:
    """The six superoperators obtained by acting on the four basis matrices."""
    sp, sm, sz = SIGMA_PLUS, SIGMA_MINUS, SIGMA_Z
    proj1 = sp @ sm
    return Superoperators(
        J0=_as_matrix(lambda rho: (sz / 4) @ rho - rho @ (sz / 4)),
        J_plus=_as_matrix(lambda rho: sp @ rho @ sp),
        J_minus=_as_matrix(lambda rho: sm @ rho @ sm),
        K0=_as_matrix(lambda rho: (proj1 @ rho + rho @ proj1 - rho) / 2),
        K_plus=_as_matrix(lambda rho: sp @ rho @ sm),
        K_minus=_as_matrix(lambda rho: sm @ rho @ sp),
    )


_OPS = superoperator_matrices()
_STACK = np.array([np.eye(4), _OPS.J0, _OPS.J_plus, _OPS.J_minus, _OPS.K0, _OPS.K_plus, _OPS.K_minus])
_FLAT = _STACK.reshape(7, 16)


def liouvillian(params: ReservoirParams, t: float) -> LiouvillianSample:
    G, e0, ep, em, n0, np_, nm = coefficient_tuple(params, t)
    weights = np.array([-G, e0, ep, em, n0, np_, nm], dtype=complex)
    return LiouvillianSample(t=t, L=(weights @ _FLAT).reshape(4, 4))


def evolve_direct(
    params: ReservoirParams,
    rho0: QubitDensity,
    t_grid,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> list[QubitDensity]:
    """Integrate ``dv/dt = L(t) v`` and return the states at ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    coeffs = coefficient_function(params)

    def rhs(t, v):
        G, e0, ep, em, n0, np_, nm, _ = coeffs(t)
        L = (np.array([-G, e0, ep, em, n0, np_, nm], dtype=complex) @ _FLAT).reshape(4, 4)
        return L @ v

    try:
        V = rk.solve(rhs, t_grid, rho0.vector(), rtol=rtol, atol=atol)
    except rk.StepSizeUnderflow as exc:
        raise IntegrationError(exc.t, exc.reason) from exc
    return [QubitDensity(v.reshape(2, 2)) for v in V]
