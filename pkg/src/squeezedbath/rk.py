"""Dormand-Prince 5(4) integrator with embedded error control.

Steps are clipped so that every requested output time is hit exactly; no
interpolation is involved in the reported values.
"""

from __future__ import annotations

import numpy as np

# Butcher tableau (Dormand & Prince 1980)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


class StepSizeUnderflow(RuntimeError):
    """The controller drove the step below round-off level, or the state left the finite range.

    Attributes
    ----------
    t : float
        Time at which integration could not proceed.
    """

    def __init__(self, t: float, reason: str):
        super().__init__(f"integration stalled at t={t:.17g}: {reason}")
        self.t = t
        self.reason = reason


def _rms(x) -> float:
    return float(np.sqrt(np.mean(np.abs(x) ** 2)))


def _initial_step(fun, t0, y0, f0, rtol, atol, t_span):
    # Hairer, Norsett & Wanner, Solving ODEs I, sec. II.4
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_span)
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_span)


def solve(fun, t_out, y0, rtol=1e-9, atol=1e-12, max_steps=1_000_000):
    """Integrate ``y' = fun(t, y)`` from ``t = 0`` and sample at ``t_out``.

    Parameters
    ----------
    fun : callable
        ``fun(t, y) -> ndarray``, same shape and dtype as ``y``.
    t_out : array_like
        Strictly ascending, non-negative output times. A leading ``0`` is
        allowed; otherwise integration starts implicitly at ``0``.
    y0 : array_like
        State at ``t = 0``.
    rtol, atol : float
        Per-component tolerances of the local error test.

    Returns
    -------
    ndarray, shape (len(t_out), len(y0))

    Raises
    ------
    StepSizeUnderflow
        When the step size collapses or the state stops being finite.
    """
    t_out = np.asarray(t_out, dtype=float)
    if t_out.ndim != 1 or t_out.size == 0:
        raise ValueError("t_out must be a non-empty 1-d array")
    if t_out[0] < 0 or np.any(np.diff(t_out) <= 0):
        raise ValueError("t_out must be non-negative and strictly ascending")

    y = np.array(y0, dtype=complex)
    out = np.empty((t_out.size, y.size), dtype=complex)
    t = 0.0
    k = np.empty((7, y.size), dtype=complex)
    k[0] = fun(t, y)
    h = None
    steps = 0

    for i, target in enumerate(t_out):
        if target == t:
            out[i] = y
            continue
        if h is None:
            h = _initial_step(fun, t, y, k[0], rtol, atol, t_out[-1])
        while t < target:
            last = False
            h_try = h
            if t + h_try >= target or target - (t + h_try) < 1e-12 * max(1.0, target):
                h_try = target - t
                last = True
            if h_try <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
                raise StepSizeUnderflow(t, "step size underflow")
            for s in range(1, 7):
                k[s] = fun(t + _C[s] * h_try, y + h_try * (_A[s] @ k[:s]))
            y_new = y + h_try * (_A[6] @ k[:6])
            err = h_try * (_E @ k)
            if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(k)):
                # treat as a rejected step; shrinking will locate the singularity
                h = 0.25 * h_try
                if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
                    raise StepSizeUnderflow(t, "non-finite state")
                continue
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            en = _rms(err / scale)
            steps += 1
            if steps > max_steps:
                raise StepSizeUnderflow(t, "maximum number of steps exceeded")
            if en <= 1.0:
                t = target if last else t + h_try
                y = y_new
                k[0] = k[6]  # first-same-as-last
                factor = _MAX_FACTOR if en == 0 else min(_MAX_FACTOR, _SAFETY * en ** -0.2)
                # a clipped step says nothing about the natural step size
                h = max(h, h_try * factor) if last else h_try * factor
            else:
                h = h_try * max(_MIN_FACTOR, _SAFETY * en ** -0.2)
        out[i] = y
    return out
