"""Closed-form reservoir functions for a qubit in a Lorentzian squeezed vacuum.

Every rate is measured in units of the spectral width ``gamma`` and every time
in units of ``1/gamma``; ``gamma`` itself is fixed to one.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

#: Spectral width of the Lorentzian; all other quantities are ratios to it.
GAMMA = 1.0

#: Half width of the frequency window used by :func:`kernel_quadrature_check`.
QUADRATURE_HALF_WINDOW = 50.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not converge."""


@dataclass(frozen=True)
class ReservoirParams:
    """Physical inputs of the model.

    Parameters
    ----------
    lam : float
        Coupling strength ``lambda / gamma``. Zero is the decoupled limit.
    omega0 : float
        Atomic transition frequency ``omega0 / gamma``.
    r : float
        Squeeze magnitude.
    theta : float
        Squeeze phase in radians.
    """

    lam: float
    omega0: float
    r: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not self.omega0 > 0.0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if not self.r >= 0.0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta}")


@dataclass(frozen=True)
class SqueezeMoments:
    N: float
    M: complex


@dataclass(frozen=True)
class CorrelationSample:
    t: float
    alpha: complex
    f: float
    alpha_tilde: complex
    F: float


@dataclass(frozen=True)
class GeneratorCoeffs:
    Gamma: float
    eps0: complex
    eps_plus: complex
    eps_minus: complex
    nu0: float
    nu_plus: float
    nu_minus: float


@dataclass(frozen=True)
class AccumulatedDecay:
    gamma_k: float


def squeeze_moments(params: ReservoirParams) -> SqueezeMoments:
    """Photon number ``N = sinh^2 r`` and anomalous moment ``M = -e^{i theta} sinh r cosh r``."""
    s, c = math.sinh(params.r), math.cosh(params.r)
    return SqueezeMoments(N=s * s, M=-cmath.exp(1j * params.theta) * s * c)


def _z(params: ReservoirParams) -> complex:
    return GAMMA + 2j * params.omega0


def correlations(params: ReservoirParams, t: float) -> CorrelationSample:
    """Running integrals of the two reservoir kernels and their time integrals."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    lam = params.lam
    z = _z(params)
    # 1 - e^{-x} via expm1 keeps small-t values accurate
    one_minus = -cmath.exp(-z * t) + 1.0 if abs(z * t) > 1e-3 else -_cexpm1(-z * t)
    alpha = lam * GAMMA * one_minus / (2.0 * z)
    alpha_tilde = lam * GAMMA * (t - one_minus / z) / (2.0 * z)
    em1 = -math.expm1(-GAMMA * t)
    f = 0.5 * lam * em1
    F = 0.5 * lam * (t - em1 / GAMMA)
    return CorrelationSample(t=t, alpha=alpha, f=f, alpha_tilde=alpha_tilde, F=F)


def _cexpm1(w: complex) -> complex:
    # e^w - 1 for small |w|, without cancellation
    x, y = w.real, w.imag
    er = math.expm1(x)
    return complex(er * math.cos(y) - 2.0 * math.sin(0.5 * y) ** 2, (er + 1.0) * math.sin(y))


def coefficient_function(params: ReservoirParams):
    """Return ``coeffs(t)`` giving the generator coefficients and ``gamma_k`` at ``t``.

    The tuple order is ``(Gamma, eps0, eps_plus, eps_minus, nu0, nu_plus,
    nu_minus, gamma_k)``. Parameter-only constants are computed once, which is
    what the integrators' right-hand sides need.
    """
    m = squeeze_moments(params)
    N, M = m.N, m.M
    MR, MI = M.real, M.imag
    Mc = M.conjugate()
    two_n1 = 2.0 * N + 1.0
    lam, w0 = params.lam, params.omega0
    z = _z(params)
    pref = lam * GAMMA / (2.0 * z)
    decay_weight = 2.0 * MR + two_n1

    def coeffs(t: float) -> tuple:
        zt = z * t
        one_minus = 1.0 - cmath.exp(-zt) if abs(zt) > 1e-3 else -_cexpm1(-zt)
        a = pref * one_minus
        at = pref * (t - one_minus / z)
        em1 = -math.expm1(-GAMMA * t)
        f = 0.5 * lam * em1
        F = 0.5 * lam * (t - em1 / GAMMA)
        aR, aI = a.real, a.imag
        ac = a.conjugate()
        cross = MR * aR + MI * aI

        Gamma = 2.0 * MR * f + 2.0 * cross + two_n1 * (f + aR)
        eps0 = -2j * (w0 + 2.0 * (MI * aR - MI * f - MR * aR) - two_n1 * aR)
        eps_plus = 2.0 * M * f + 2.0 * Mc * a + two_n1 * (f + a)
        eps_minus = 2.0 * M * ac + 2.0 * Mc * f + two_n1 * (f + ac)
        nu0 = 2.0 * (aR - f)
        nu_plus = 2.0 * (MR * f + cross + N * f + (N + 1.0) * aR)
        nu_minus = 2.0 * (MR * f + cross + (N + 1.0) * f + N * aR)
        gamma_k = decay_weight * (F + at.real) + 2.0 * MI * at.imag
        return Gamma, eps0, eps_plus, eps_minus, nu0, nu_plus, nu_minus, gamma_k

    return coeffs


def coefficient_tuple(params: ReservoirParams, t: float) -> tuple:
    """``(Gamma, eps0, eps_plus, eps_minus, nu0, nu_plus, nu_minus)`` at ``t``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return coefficient_function(params)(t)[:7]


def generator_coeffs(params: ReservoirParams, t: float) -> GeneratorCoeffs:
    return GeneratorCoeffs(*coefficient_tuple(params, t))


def accumulated_decay(params: ReservoirParams, t: float) -> AccumulatedDecay:
    """Time integral of ``Gamma`` from 0 to ``t`` in closed form."""
    m = squeeze_moments(params)
    c = correlations(params, t)
    MR, MI = m.M.real, m.M.imag
    gk = (2.0 * MR + 2.0 * m.N + 1.0) * (c.F + c.alpha_tilde.real) + 2.0 * MI * c.alpha_tilde.imag
    return AccumulatedDecay(gamma_k=gk)


def spectral_density(params: ReservoirParams, omega):
    """Lorentzian spectral density centred on ``omega0``."""
    d = np.asarray(omega) - params.omega0
    return params.lam * GAMMA**2 / (2.0 * np.pi * (d * d + GAMMA**2))


def kernels(params: ReservoirParams, t: float) -> tuple[complex, complex]:
    """Closed forms of the rotating and counter-rotating reservoir kernels."""
    a1 = 0.5 * GAMMA * params.lam * math.exp(-GAMMA * t)
    a2 = 0.5 * GAMMA * params.lam * cmath.exp((-GAMMA + 2j * params.omega0) * t)
    return complex(a1), a2


def _weighted_quad(params: ReservoirParams, t: float, weight: str) -> float:
    w = QUADRATURE_HALF_WINDOW * GAMMA

    def lorentz(x):
        return params.lam * GAMMA**2 / (2.0 * np.pi * (x * x + GAMMA**2))

    if t == 0.0:
        if weight == "sin":
            return 0.0
        out = integrate.quad(lorentz, -w, w, full_output=1, epsabs=1e-13, epsrel=1e-12, limit=200)
    else:
        out = integrate.quad(lorentz, -w, w, weight=weight, wvar=t, full_output=1,
                             epsabs=1e-13, epsrel=1e-12, limit=200)
    # quad appends a message only when ier > 0
    ier = len(out) > 3
    val = out[0]
    if ier:
        raise QuadratureError(f"kernel quadrature failed to converge at t={t}")
    return val


def kernel_quadrature_check(params: ReservoirParams, t: float) -> float:
    """Largest deviation between closed-form kernels and their truncated-window quadrature.

    The window is ``[omega0 - 50, omega0 + 50]``; the residual therefore
    includes the Lorentzian tail dropped outside it.

    Raises
    ------
    QuadratureError
        If the adaptive quadrature reports non-convergence.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if params.lam == 0.0:
        return 0.0
    # shift to x = omega - omega0 so the oscillatory weights are cos(x t), sin(x t)
    cos_part = _weighted_quad(params, t, "cos")
    sin_part = _weighted_quad(params, t, "sin")
    quad_a1 = complex(cos_part, -sin_part)
    quad_a2 = cmath.exp(2j * params.omega0 * t) * complex(cos_part, sin_part)
    a1, a2 = kernels(params, t)
    return max(abs(quad_a1 - a1), abs(quad_a2 - a2))
