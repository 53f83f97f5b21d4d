import numpy as np
import pytest

from squeezedbath import rk


def test_exponential_decay():
    t = np.linspace(0.0, 5.0, 11)
    y = rk.solve(lambda s, v: -v, t, [1.0], rtol=1e-10, atol=1e-14)
    assert np.abs(y[:, 0] - np.exp(-t)).max() <= 1e-9


def test_complex_rotation():
    t = np.array([0.5, 1.0, 10.0])
    y = rk.solve(lambda s, v: 3j * v, t, [1.0 + 0j], rtol=1e-10, atol=1e-13)
    assert np.abs(y[:, 0] - np.exp(3j * t)).max() <= 1e-8


def test_time_dependent_rhs():
    # y' = 2t y -> y = exp(t^2)
    t = np.linspace(0.0, 2.0, 5)
    y = rk.solve(lambda s, v: 2 * s * v, t, [1.0], rtol=1e-11, atol=1e-14)
    assert np.abs(y[:, 0] / np.exp(t**2) - 1).max() <= 1e-9


def test_leading_zero_and_implicit_start():
    f = lambda s, v: -2 * v  # noqa: E731
    a = rk.solve(f, [0.0, 1.0], [1.0])
    b = rk.solve(f, [1.0], [1.0])
    assert a[0, 0] == 1.0
    assert a[1, 0] == pytest.approx(b[0, 0], rel=1e-12)


def test_tighter_tolerance_is_more_accurate():
    t = [3.0]
    exact = np.cos(3.0)

    def osc(s, v):
        return np.array([v[1], -v[0]])

    coarse = abs(rk.solve(osc, t, [1.0, 0.0], rtol=1e-5, atol=1e-8)[0, 0] - exact)
    fine = abs(rk.solve(osc, t, [1.0, 0.0], rtol=1e-10, atol=1e-13)[0, 0] - exact)
    assert fine < coarse
    assert fine <= 1e-9


def test_blowup_reports_time():
    # y' = y^2, y(0) = 1 escapes at t = 1
    with pytest.raises(rk.StepSizeUnderflow) as err:
        rk.solve(lambda s, v: v * v, [2.0], [1.0])
    assert err.value.t == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("grid", [[], [1.0, 0.5], [-1.0, 1.0], [[0.0, 1.0]]])
def test_bad_grid(grid):
    with pytest.raises(ValueError):
        rk.solve(lambda s, v: v, grid, [1.0])
