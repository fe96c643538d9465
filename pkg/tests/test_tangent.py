import math

import numpy as np
import pytest

from boussinesq.dynamics import State, advance, forcing_field, rhs, step
from boussinesq.errors import DegenerateFit, InvalidState
from boussinesq.initial import random_perturbed
from boussinesq.spectral import Field, Grid, h1_norm, l2_norm
from boussinesq.tangent import (
    CoIntegrator,
    TangentState,
    difference,
    displace,
    e_inner,
    e_norm,
    finite_diff_tangent_check,
    fitted_slope,
    propagate,
    propagate_history,
    random_tangent,
    tangent_rhs,
    tangent_step,
    taylor_remainder_order,
    taylor_remainders,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def setup():
    g = Grid(32)
    base = random_perturbed(g, 7, 0.3, 0.3, kmax=3)
    f = forcing_field(g, [(1, 1.0, 0.5)])
    return g, base, f


def test_tangent_state_validation_and_algebra(setup):
    g, _, _ = setup
    with pytest.raises(InvalidState):
        TangentState(Field.constant(g, 1.0), Field.zeros(g))
    a = random_tangent(g, np.random.default_rng(0))
    b = random_tangent(g, np.random.default_rng(1))
    assert e_norm(a) == pytest.approx(1.0, rel=1e-14)
    assert e_inner(a, b) == pytest.approx(e_inner(b, a), rel=1e-14)
    assert e_norm(a * 3.0) == pytest.approx(3.0, rel=1e-14)
    assert e_norm(a - a) == 0.0
    assert e_inner(a, a) == pytest.approx(h1_norm(a.v) ** 2 + l2_norm(a.h) ** 2, rel=1e-14)
    assert e_norm(-a + a * 2) == pytest.approx(1.0, rel=1e-14)


def test_displace_and_difference_invert(setup):
    _, base, _ = setup
    beta = random_tangent(base.grid, np.random.default_rng(2), kmax=4)
    moved = displace(base, beta, 1e-3)
    back = difference(moved, base) * 1e3
    assert e_norm(back - beta) < 1e-10


def test_tangent_rhs_matches_central_difference(setup):
    _, base, f = setup
    beta = random_tangent(base.grid, np.random.default_rng(3), kmax=4)
    dv, dh = tangent_rhs(beta, base)
    gaps = []
    for eps in (1e-3, 5e-4):
        up = rhs(displace(base, beta, eps), f)
        dn = rhs(displace(base, beta, -eps), f)
        fd_v = (up[0] - dn[0]) * (0.5 / eps)
        fd_h = (up[1] - dn[1]) * (0.5 / eps)
        gaps.append(max(np.abs((fd_v - dv).values).max(), np.abs((fd_h - dh).values).max()))
    # quadratic vector field: the central difference is exact up to roundoff
    assert max(gaps) < 1e-7


def test_tangent_step_is_linear(setup):
    g, base, f = setup
    dt = 1e-3
    after = step(base, f, dt)
    rng = np.random.default_rng(4)
    b1, b2 = random_tangent(g, rng), random_tangent(g, rng)
    lhs = tangent_step(b1 * 2.0 + b2 * -0.5, base, after, dt, f)
    rhs_ = tangent_step(b1, base, after, dt, f) * 2.0 + tangent_step(b2, base, after, dt, f) * -0.5
    assert e_norm(lhs - rhs_) < 1e-13
    assert lhs.t == after.t


def test_tangent_step_checks_time_gap(setup):
    g, base, f = setup
    after = step(base, f, 1e-3)
    with pytest.raises(ValueError):
        tangent_step(TangentState.zeros(g), base, after, 2e-3, f)


def test_propagate_matches_stepwise(setup):
    g, base, f = setup
    beta = random_tangent(g, np.random.default_rng(5), kmax=4)
    end, (lin,) = propagate(base, [beta], f, 0.05, 1e-3)
    b, s = beta, base
    for _ in range(50):
        nxt = step(s, f, 1e-3)
        b = tangent_step(b, s, nxt, 1e-3, f)
        s = nxt
    assert end.u == s.u and end.w == s.w
    assert e_norm(lin - b) < 1e-14


def test_finite_difference_gap_is_first_order(setup):
    g, base, f = setup
    beta = random_tangent(g, np.random.default_rng(6), kmax=4, decay=2.0)
    eps = [1e-3, 1e-4, 1e-5]
    gaps = [finite_diff_tangent_check(base, beta, f, 0.5, e) for e in eps]
    assert 0.9 <= fitted_slope(eps, gaps) <= 1.1


def test_taylor_remainder_is_second_order(setup):
    g, base, f = setup
    beta = random_tangent(g, np.random.default_rng(8), kmax=4, decay=2.0)
    slope = taylor_remainder_order(base, beta, f, 0.5, [1e-2, 1e-3, 1e-4, 1e-5])
    assert slope > 1.0
    assert slope == pytest.approx(2.0, abs=0.05)


def test_taylor_order_input_checks(setup):
    g, base, f = setup
    beta = random_tangent(g, np.random.default_rng(9), kmax=4)
    with pytest.raises(ValueError):
        taylor_remainder_order(base, beta, f, 0.1, [1e-2, 1e-3, 1e-4])
    with pytest.raises(ValueError):
        taylor_remainder_order(base, beta, f, 0.1, [1e-2, 1e-3, 1e-4, 2e-5])


def test_linear_system_has_roundoff_remainders():
    g = Grid(32)
    base = State.equilibrium(g)
    beta = random_tangent(g, np.random.default_rng(10), kmax=4)
    rem, _ = taylor_remainders(base, beta, Field.zeros(g), 0.1, [1e-2, 1e-3], nonlinearity=0.0)
    assert np.all(rem < 1e-14)
    with pytest.raises(DegenerateFit):
        taylor_remainder_order(base, beta, Field.zeros(g), 0.1, [1e-2, 1e-3, 1e-4, 1e-5],
                               nonlinearity=0.0)


def test_cointegrator_and_history(setup):
    g, base, f = setup
    beta = random_tangent(g, np.random.default_rng(11), kmax=4)
    co = CoIntegrator(base, f, 1e-3, beta.v.rfft[None], beta.h.rfft[None])
    co.advance(20)
    assert co.t == pytest.approx(base.t + 0.02)
    assert co.base().u == advance(base, f, 0.02, 1e-3).u
    times, norms = propagate_history(base, beta, f, 0.02, 1e-3, every=10)
    assert times.tolist() == pytest.approx([0.0, 0.01, 0.02])
    assert norms[0] == pytest.approx(1.0) and norms[-1] == pytest.approx(e_norm(co.tangent(0)))
    assert len(co.tangents()) == 1
