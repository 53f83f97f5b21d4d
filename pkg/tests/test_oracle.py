import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from squeezedbath import oracle, rk
from squeezedbath.oracle import IntegrationError, evolve_direct, liouvillian, superoperator_matrices
from squeezedbath.propagator import QubitDensity, evolve_algebraic
from squeezedbath.reservoir import ReservoirParams

GRID = np.linspace(0.0, 5.0, 51)
TRACE_ROW = np.array([1, 0, 0, 1])


def comm(a, b):
    return a @ b - b @ a


def test_superoperator_shapes():
    ops = superoperator_matrices()
    assert np.array_equal(ops.J0, np.diag([0, 0.5, -0.5, 0]))
    assert np.array_equal(ops.K0, np.diag([0.5, 0, 0, -0.5]))
    expected = {"J_plus": (1, 2), "J_minus": (2, 1), "K_plus": (0, 3), "K_minus": (3, 0)}
    for name, (row, col) in expected.items():
        m = getattr(ops, name)
        assert np.count_nonzero(m) == 1
        assert m[row, col] == 1


def test_commutation_relations_exact():
    o = superoperator_matrices()
    assert np.array_equal(comm(o.J_minus, o.J_plus), -2 * o.J0)
    assert np.array_equal(comm(o.J0, o.J_plus), o.J_plus)
    assert np.array_equal(comm(o.J0, o.J_minus), -o.J_minus)
    assert np.array_equal(comm(o.K_minus, o.K_plus), -2 * o.K0)
    assert np.array_equal(comm(o.K0, o.K_plus), o.K_plus)
    assert np.array_equal(comm(o.K0, o.K_minus), -o.K_minus)
    for k in (o.K0, o.K_plus, o.K_minus):
        for j in (o.J0, o.J_plus, o.J_minus):
            assert not comm(k, j).any()


def test_liouvillian_at_zero_time():
    p = ReservoirParams(12.0, 4.0, 0.5, 1.0)
    assert np.array_equal(liouvillian(p, 0.0).L, np.diag([0, -4j, 4j, 0]))


def test_decoupled_liouvillian_constant():
    p = ReservoirParams(0.0, 4.0, 0.5, 1.0)
    L0 = liouvillian(p, 0.0).L
    for t in (0.3, 2.0, 11.0):
        assert np.array_equal(liouvillian(p, t).L, L0)


@settings(max_examples=300, deadline=None)
@given(
    st.builds(ReservoirParams, lam=st.floats(0, 20), omega0=st.floats(0.5, 15), r=st.floats(0, 1.2),
              theta=st.floats(0, 2 * math.pi)),
    st.floats(0, 10),
)
def test_liouvillian_preserves_trace(p, t):
    L = liouvillian(p, t).L
    assert np.abs(TRACE_ROW @ L).max() <= 1e-12 * max(1.0, np.abs(L).max())


def test_initial_time_returns_input(headline):
    rho0 = QubitDensity.from_elements(0.3, 0.2 - 0.1j, 0.2 + 0.1j, 0.7)
    (out,) = evolve_direct(headline, rho0, [0.0])
    assert np.array_equal(out.matrix, rho0.matrix)


def test_free_evolution():
    w0 = 5.0
    rho0 = QubitDensity.from_elements(0.4, 0.3j, -0.3j, 0.6)
    for t, rho in zip(GRID, evolve_direct(ReservoirParams(0.0, w0), rho0, GRID)):
        assert rho.rho11 == pytest.approx(0.4, abs=1e-12)
        assert rho.rho10 == pytest.approx(0.3j * np.exp(-1j * w0 * t), abs=1e-8)
        assert rho.rho01 == pytest.approx(-0.3j * np.exp(1j * w0 * t), abs=1e-8)


def test_linearity(headline):
    a = 0.3
    r1 = QubitDensity.from_elements(1, 0, 0, 0)
    r2 = QubitDensity.from_elements(0.5, 0.5j, -0.5j, 0.5)
    mix = QubitDensity(a * r1.matrix + (1 - a) * r2.matrix)
    e1, e2, em = (evolve_direct(headline, r, GRID) for r in (r1, r2, mix))
    for x, y, z in zip(e1, e2, em):
        assert np.abs(a * x.matrix + (1 - a) * y.matrix - z.matrix).max() <= 1e-9


def test_plus_state_matches_algebraic_route(headline):
    plus = QubitDensity(np.full((2, 2), 0.5, dtype=complex))
    direct = evolve_direct(headline, plus, GRID)
    alg = evolve_algebraic(headline, plus, GRID)
    assert max(np.abs(a.matrix - d.matrix).max() for a, d in zip(alg, direct)) <= 1e-6


def test_direct_route_conserves(headline):
    rho0 = QubitDensity.from_elements(0.25, 0.1 + 0.4j, 0.1 - 0.4j, 0.75)
    for rho in evolve_direct(headline, rho0, GRID):
        assert abs(rho.trace() - 1) <= 1e-9
        assert rho.hermiticity_error() <= 1e-10


def test_integrator_failure_carries_time(monkeypatch, headline):
    def failing(*args, **kwargs):
        raise rk.StepSizeUnderflow(1.25, "step size underflow")

    monkeypatch.setattr(oracle.rk, "solve", failing)
    with pytest.raises(IntegrationError) as err:
        evolve_direct(headline, QubitDensity.from_elements(1, 0, 0, 0), GRID)
    assert err.value.t == 1.25
