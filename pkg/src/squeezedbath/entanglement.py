"""Two-qubit states, concurrence and sudden-death bookkeeping.

Two-qubit matrices use the product basis ``{|11>, |10>, |01>, |00>}``, i.e.
index ``2*a + b`` with ``a``, ``b`` in ``{0: |1>, 1: |0>}`` for qubits A and B.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .propagator import SingleQubitMap

ESD_THRESHOLD = 1e-6
ESD_WINDOW = 5

# tolerance used to decide whether a matrix is X-shaped
X_SHAPE_TOL = 1e-8

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)

# positions outside the diagonal and anti-diagonal
_OFF_X = np.ones((4, 4), dtype=bool)
_OFF_X[np.arange(4), np.arange(4)] = False
_OFF_X[np.arange(4), 3 - np.arange(4)] = False


class NotXStateError(ValueError):
    pass


class StateValidityWarning(UserWarning):
    """The density matrix has eigenvalues noticeably below zero."""


@dataclass(frozen=True)
class BellFamilyState:
    """``Phi = beta|01> + eta|10>`` or ``Psi = beta|00> + eta|11>``, ``eta = sqrt(1-beta^2) e^{i phi}``."""

    family: Literal["phi", "psi"]
    beta: float
    phi: float = 0.0

    def __post_init__(self):
        fam = self.family.lower()
        if fam not in ("phi", "psi"):
            raise ValueError(f"family must be 'phi' or 'psi', got {self.family!r}")
        object.__setattr__(self, "family", fam)
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")

    @classmethod
    def from_beta_sq(cls, family: str, beta_sq: float, phi: float = 0.0) -> BellFamilyState:
        if not 0.0 < beta_sq < 1.0:
            raise ValueError(f"beta_sq must lie in (0, 1), got {beta_sq}")
        return cls(family, math.sqrt(beta_sq), phi)

    @property
    def eta(self) -> complex:
        return math.sqrt(1.0 - self.beta**2) * complex(math.cos(self.phi), math.sin(self.phi))


@dataclass(frozen=True)
class ConcurrenceSeries:
    t_grid: np.ndarray
    c_values: np.ndarray
    esd_time: float | None
    revival_count: int
    dark_intervals: list[tuple[float, float]] = field(default_factory=list)


def initial_state(spec: BellFamilyState) -> np.ndarray:
    """Pure-state density matrix of a Bell-family state."""
    ket = np.zeros(4, dtype=complex)
    if spec.family == "phi":
        ket[2] = spec.beta  # |01>
        ket[1] = spec.eta  # |10>
    else:
        ket[3] = spec.beta  # |00>
        ket[0] = spec.eta  # |11>
    return np.outer(ket, ket.conj())


def joint_density(qmap: SingleQubitMap | np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """Apply the same single-qubit map to both qubits.

    ``qmap`` may be a :class:`SingleQubitMap` or its 4x4 superoperator matrix
    (prefactor included) acting on ``(rho11, rho10, rho01, rho00)``.
    """
    S = qmap.matrix() if isinstance(qmap, SingleQubitMap) else np.asarray(qmap)
    S4 = S.reshape(2, 2, 2, 2)  # (a, a', c, c')
    R = np.asarray(rho0).reshape(2, 2, 2, 2)  # (c, d, c', d')
    out = np.einsum("xycw,uvdz,cdwz->xuyv", S4, S4, R)
    return out.reshape(4, 4)


def is_x_state(rho: np.ndarray, tol: float = X_SHAPE_TOL) -> bool:
    rho = np.asarray(rho)
    return bool(np.all(np.abs(rho[_OFF_X]) <= tol * max(1.0, np.abs(rho).max())))


def concurrence_x(rho: np.ndarray) -> float:
    """Closed-form concurrence of an X-shaped two-qubit state.

    Raises
    ------
    NotXStateError
        If entries off the diagonal and anti-diagonal are not negligible; use
        :func:`concurrence_full` for such states.
    """
    rho = np.asarray(rho)
    if not is_x_state(rho):
        raise NotXStateError("state is not X-shaped; use concurrence_full")
    d = rho.diagonal().real
    c1 = 2.0 * (math.sqrt(abs(rho[1, 2] * rho[2, 1])) - math.sqrt(max(d[0] * d[3], 0.0)))
    c2 = 2.0 * (math.sqrt(abs(rho[0, 3] * rho[3, 0])) - math.sqrt(max(d[1] * d[2], 0.0)))
    return max(0.0, c1, c2)


def concurrence_full(rho: np.ndarray) -> float:
    """Wootters concurrence of an arbitrary two-qubit density matrix.

    The decreasing roots ``l1..l4`` of the spectrum of
    ``rho (sy x sy) rho* (sy x sy)`` are obtained as singular values of
    ``A^T (sy x sy) A`` with ``rho = A A^dagger``, which avoids taking square
    roots of eigenvalues that are zero up to round-off.
    Emits :class:`StateValidityWarning` if ``rho`` has an eigenvalue below
    ``-1e-8``.
    """
    rho = np.asarray(rho, dtype=complex)
    h = 0.5 * (rho + rho.conj().T)
    w, V = np.linalg.eigh(h)
    if w[0] < -1e-8:
        warnings.warn(
            f"density matrix has eigenvalue {w[0]:.3g} < 0; concurrence is not meaningful",
            StateValidityWarning,
            stacklevel=2,
        )
        ev = np.linalg.eigvals(rho @ _YY @ rho.conj() @ _YY)
        lams = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    else:
        A = V * np.sqrt(np.clip(w, 0.0, None))
        lams = np.linalg.svd(A.T @ _YY @ A, compute_uv=False)
    return max(0.0, float(lams[0] - lams[1] - lams[2] - lams[3]))


def detect_esd(
    t_grid,
    c_values,
    threshold: float = ESD_THRESHOLD,
    window: int = ESD_WINDOW,
) -> tuple[float | None, int, list[tuple[float, float]]]:
    """Locate entanglement sudden death and revivals in a concurrence series.

    A death is a drop below ``threshold`` that persists for at least
    ``window`` consecutive samples; a revival is a return above it with the
    same persistence. Shorter excursions are treated as noise.

    Returns
    -------
    esd_time : float or None
        First death, linearly interpolated at the threshold crossing.
    revival_count : int
    dark_intervals : list of (start, end)
        Each death paired with the following revival, or with the grid end.
    """
    t = np.asarray(t_grid, dtype=float)
    c = np.asarray(c_values, dtype=float)
    if t.shape != c.shape or t.ndim != 1:
        raise ValueError("t_grid and c_values must be 1-d arrays of equal length")
    if t.size < 2 * window:
        raise ValueError(f"need at least {2 * window} samples, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly ascending")

    below = c < threshold
    # run-length encode
    edges = np.flatnonzero(np.diff(below.astype(np.int8))) + 1
    starts = np.concatenate(([0], edges))
    ends = np.concatenate((edges, [below.size]))

    def crossing(i: int) -> float:
        # threshold crossing between samples i-1 and i
        c0, c1 = c[i - 1], c[i]
        if c1 == c0:
            return float(t[i])
        s = (threshold - c0) / (c1 - c0)
        return float(t[i - 1] + min(max(s, 0.0), 1.0) * (t[i] - t[i - 1]))

    dead = bool(below[0])
    dark: list[tuple[float, float]] = []
    dark_start = float(t[0]) if dead else None
    revivals = 0
    for s, e in zip(starts, ends):
        if bool(below[s]) == dead or e - s < window:
            continue
        if not dead:
            dark_start = crossing(s) if s > 0 else float(t[0])
            dead = True
        else:
            dark.append((dark_start, crossing(s)))
            revivals += 1
            dead = False
    if dead:
        dark.append((dark_start, float(t[-1])))
    esd_time = dark[0][0] if dark else None
    return esd_time, revivals, dark


def concurrence_series(
    t_grid,
    c_values,
    threshold: float = ESD_THRESHOLD,
    window: int = ESD_WINDOW,
) -> ConcurrenceSeries:
    esd_time, revivals, dark = detect_esd(t_grid, c_values, threshold, window)
    return ConcurrenceSeries(
        t_grid=np.asarray(t_grid, dtype=float),
        c_values=np.asarray(c_values, dtype=float),
        esd_time=esd_time,
        revival_count=revivals,
        dark_intervals=dark,
    )
