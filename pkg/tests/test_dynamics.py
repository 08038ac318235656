import math

import numpy as np
import pytest

from agentops.dynamics import (
    AgentOperator,
    Schedule,
    StopRule,
    cluster_point_check,
    compose_round,
    constant,
    fejer_report,
    fixed_point_residual,
    harmonic,
    iterate,
    poly_decay,
)
from agentops.errors import (
    DimensionError,
    DivergenceError,
    InvalidParameterError,
    RejectedReferenceError,
)
from agentops.penalties import AffineQuadratic, EnergyFunction
from agentops.sets import Ball, Box, Halfspace, Hyperplane

from factories import feasible_scenario_sets, random_set
from oracles import affine_subspace_distance, line_projector

EXAMPLE_TERMS = [AffineQuadratic([1, 0], 1), AffineQuadratic([0, 1], 1), AffineQuadratic([1, 1], 1)]
EXAMPLE_OPS = [AgentOperator.proximal(p, f"phi{i + 1}") for i, p in enumerate(EXAMPLE_TERMS)]
XSTAR = np.array([2 / 3, 2 / 3])


def proj(*sets):
    return [AgentOperator.projection(s) for s in sets]


# -- compose_round ----------------------------------------------------------

def test_single_projection_round():
    y, inter = compose_round(proj(Hyperplane([1, 0], 1)), [0, 0])
    assert np.array_equal(y, [1, 0])
    assert len(inter) == 1


def test_three_agent_round_from_minimizer():
    y, inter = compose_round(EXAMPLE_OPS, XSTAR, 1.0)
    expected = [[5 / 6, 2 / 3], [5 / 6, 5 / 6], [11 / 18, 11 / 18]]
    np.testing.assert_allclose(inter, expected, atol=1e-15)
    np.testing.assert_allclose(y, [11 / 18, 11 / 18], atol=1e-15)


def test_identical_projections_equal_one():
    rng = np.random.default_rng(0)
    s = Ball([0.2, -0.1], 0.7)
    for _ in range(50):
        x = rng.normal(scale=2, size=2)
        y, _ = compose_round(proj(s, s, s, s), x)
        np.testing.assert_allclose(y, s.project(x), atol=1e-15, rtol=0)


def test_round_validation():
    with pytest.raises(InvalidParameterError):
        compose_round([], [0, 0])
    with pytest.raises(DimensionError):
        compose_round(proj(Hyperplane([1, 0, 0], 0)), [0, 0])
    with pytest.raises(InvalidParameterError):
        compose_round(EXAMPLE_OPS, [0, 0], 0.0)
    # projection-only rounds ignore lambda
    y, _ = compose_round(proj(Hyperplane([1, 0], 1)), [0, 0], 0.0)
    assert np.array_equal(y, [1, 0])


def test_agent_needs_exactly_one_body():
    with pytest.raises(InvalidParameterError):
        AgentOperator("x")
    with pytest.raises(InvalidParameterError):
        AgentOperator("x", set=Box([0], [1]), penalty=AffineQuadratic([1], 0))


# -- schedules and stop rules -----------------------------------------------

def test_schedules():
    assert [harmonic(1.0)(k) for k in (1, 2, 4)] == [1.0, 0.5, 0.25]
    assert constant(0.3)(1000) == 0.3
    assert poly_decay(2.0, 0.75)(16) == pytest.approx(2.0 / 8.0)
    assert harmonic().diminishing and poly_decay(1, 1).diminishing and not constant(1).diminishing
    with pytest.raises(ValueError):
        harmonic()(0)


@pytest.mark.parametrize("bad", [
    lambda: Schedule("constant", 0),
    lambda: Schedule("poly", 1.0, 0.5),
    lambda: Schedule("poly", 1.0, 1.2),
    lambda: Schedule("harmonic", 1.0, 0.7),
    lambda: Schedule("cosine", 1.0),
    lambda: StopRule(0),
    lambda: StopRule(10, -1),
    lambda: StopRule(10, 0, -1),
])
def test_invalid_schedule_or_stop(bad):
    with pytest.raises(InvalidParameterError):
        bad()


# -- iterate ----------------------------------------------------------------

def test_three_agent_scenario_converges_under_harmonic_steps():
    traj = iterate(EXAMPLE_OPS, [0, 0], harmonic(1.0), StopRule(10**6, 1e-10))
    assert traj.termination == "step_tol"
    assert np.linalg.norm(traj.final - XSTAR) <= 1e-3


def test_orthogonal_hyperplanes_two_rounds():
    traj = iterate(proj(Hyperplane([1, 0], 0), Hyperplane([0, 1], 0)), [3, 5], constant(1), StopRule(100, 1e-14))
    assert traj.rounds <= 2
    assert np.array_equal(traj.final, [0, 0])


def test_von_neumann_lines_match_linear_contraction():
    theta = 0.3
    ops = proj(Hyperplane([0, 1], 0), Hyperplane([-math.sin(theta), math.cos(theta)], 0))
    traj = iterate(ops, [1, 1], constant(1), StopRule(5000, 1e-15))
    M = line_projector(theta) @ line_projector(0.0)
    x = np.array([1.0, 1.0])
    for k in range(1, traj.rounds + 1):
        x = M @ x
        np.testing.assert_allclose(traj.states[k], x, atol=1e-15)
    assert np.linalg.norm(traj.final) < 1e-13
    # geometric rate cos^2(theta) per round once on the lines
    ratios = traj.step_norms[2:40] / traj.step_norms[1:39]
    np.testing.assert_allclose(ratios, math.cos(theta) ** 2, rtol=1e-9)


def test_trajectory_bookkeeping():
    F = EnergyFunction(tuple(EXAMPLE_TERMS))
    traj = iterate(EXAMPLE_OPS, [0, 0], harmonic(1.0), StopRule(50), F)
    K = traj.rounds
    assert K == 50 and traj.termination == "max_rounds"
    assert traj.states.shape == (K + 1, 2)
    assert traj.lambdas.shape == traj.step_norms.shape == (K,)
    assert traj.energies.shape == (K + 1,)
    assert traj.per_agent_states.shape == (K, 3, 2)
    np.testing.assert_allclose(traj.lambdas, 1.0 / np.arange(1, K + 1))
    np.testing.assert_allclose(traj.step_norms, np.linalg.norm(np.diff(traj.states, axis=0), axis=1), atol=1e-15)
    np.testing.assert_allclose(traj.per_agent_states[:, -1], traj.states[1:], atol=0)
    np.testing.assert_allclose(traj.energies, [F(x) for x in traj.states], rtol=1e-13)


def test_iterate_agrees_with_round_by_round_composition():
    traj = iterate(EXAMPLE_OPS, [0.3, -2], poly_decay(1.5, 0.8), StopRule(200))
    x = np.array([0.3, -2.0])
    for k in range(1, 201):
        x, _ = compose_round(EXAMPLE_OPS, x, 1.5 / k ** 0.8)
        np.testing.assert_allclose(traj.states[k], x, atol=1e-12)


def test_energy_tol_stop():
    F = EnergyFunction(tuple(EXAMPLE_TERMS))
    traj = iterate(EXAMPLE_OPS, [0, 0], harmonic(1.0), StopRule(10**6, 0.0, 1e-12), F)
    assert traj.termination == "energy_tol"
    assert abs(traj.energies[-1] - traj.energies[-2]) < 1e-12


def test_record_agents_default_depends_on_dim():
    ops = proj(Box(np.zeros(20), np.ones(20)))
    assert iterate(ops, np.full(20, 2.0), constant(1), StopRule(3)).per_agent_states is None
    assert iterate(proj(Box([0], [1])), [2.0], constant(1), StopRule(3)).per_agent_states is not None


def test_determinism():
    a = iterate(EXAMPLE_OPS, [0, 0], harmonic(1.0), StopRule(500))
    b = iterate(EXAMPLE_OPS, [0, 0], harmonic(1.0), StopRule(500))
    assert np.array_equal(a.states, b.states) and np.array_equal(a.step_norms, b.step_norms)


def test_divergence_keeps_partial_trajectory():
    # the residual a.x - b overflows to inf, which poisons the state
    with pytest.raises(DivergenceError) as info:
        iterate(proj(Hyperplane([1, 1], 0)), [1.5e308, 1.5e308], constant(1), StopRule(10))
    traj = info.value.trajectory
    assert traj.rounds == 0 and traj.states.shape == (1, 2)


# -- diagnostics -------------------------------------------------------------

def test_fixed_point_residual_examples():
    sets = [Halfspace([1, 1], 1), Ball([0, 0], 2)]
    assert fixed_point_residual(proj(*sets), [0.2, 0.3]) == 0
    assert fixed_point_residual(EXAMPLE_OPS, XSTAR, 1.0) == pytest.approx(math.sqrt(2) / 18, abs=1e-15)
    r3 = fixed_point_residual(EXAMPLE_OPS, XSTAR, 1e-3)
    r6 = fixed_point_residual(EXAMPLE_OPS, XSTAR, 1e-6)
    assert r6 < r3 < fixed_point_residual(EXAMPLE_OPS, XSTAR, 1.0)
    assert r6 < 1e-5


def test_fejer_report_examples():
    sets = [Halfspace([1, 0], 0), Ball([0, 0], 3)]
    traj = iterate(proj(*sets), [5, 4], constant(1), StopRule(100, 1e-14))
    rep = fejer_report(traj, [[-1, 0], [0, 2]], sets)
    assert rep.passed and rep.worst <= 1e-12 and not rep.informational

    still = iterate(proj(*sets), [-1, 1], constant(1), StopRule(5))
    d = np.linalg.norm(still.states - np.array([-2.0, 0.0]), axis=1)
    assert np.all(d == d[0])

    with pytest.raises(RejectedReferenceError):
        fejer_report(traj, [[1, 0]], sets)


def test_fejer_informational_for_prox():
    traj = iterate(EXAMPLE_OPS, [0, 0], harmonic(1.0), StopRule(100))
    assert fejer_report(traj, [XSTAR]).informational


def test_cluster_point_examples():
    sets = [Halfspace([1, 1], 1), Box([-1, -1], [0.5, 0.5])]
    traj = iterate(proj(*sets), [4, 4], constant(1), StopRule(1000, 1e-14))
    rep = cluster_point_check(traj, sets, 1e-6)
    assert rep.passed and rep.converged

    ball_ops = proj(Hyperplane([1, 0], 0.9), Ball([0, 0], 1))
    short = iterate(ball_ops, [30, -10], constant(1), StopRule(1))
    rep = cluster_point_check(short, [s.set for s in ball_ops], 1e-6)
    assert not rep.passed and len(rep.distances) == 2

    planes = [Hyperplane([1, 0], 0), Hyperplane([1, 0], 1)]
    for n in (1, 10, 1000):
        t = iterate(proj(*planes), [0.25, 2], constant(1), StopRule(n))
        rep = cluster_point_check(t, planes, 1e-6)
        # closed form: every round ends at (1, 2), a unit away from the first plane
        assert rep.distances == [1.0, 0.0]
        assert not rep.passed


# -- convergence properties -------------------------------------------------------

def test_intersection_is_invariant():
    rng = np.random.default_rng(21)
    for _ in range(100):
        dim = int(rng.integers(2, 6))
        sets, anchor = feasible_scenario_sets(rng, dim, int(rng.integers(2, 6)))
        y, _ = compose_round(proj(*sets), anchor)
        np.testing.assert_allclose(y, anchor, atol=1e-12, rtol=0)


def test_fejer_monotone_random_projection_scenarios():
    rng = np.random.default_rng(22)
    for _ in range(100):
        dim = int(rng.integers(2, 6))
        sets, anchor = feasible_scenario_sets(rng, dim, int(rng.integers(2, 6)))
        x0 = anchor + rng.normal(scale=5, size=dim)
        traj = iterate(proj(*sets), x0, constant(1), StopRule(300, 1e-14))
        assert fejer_report(traj, [anchor], sets).worst <= 1e-12


def test_degenerate_collapse():
    rng = np.random.default_rng(23)
    for kind in ("hyperplane", "halfspace", "box", "ball"):
        s = random_set(rng, 3, kind)
        for _ in range(25):
            x = rng.normal(size=3)
            y, _ = compose_round(proj(*[s] * 5), x)
            np.testing.assert_allclose(y, s.project(x), atol=1e-15, rtol=0)


def test_strict_emergence():
    A = np.array([[1.0, 2.0, -1.0], [0.5, -1.0, 1.0]])
    b = np.array([1.0, 0.5])
    planes = [Hyperplane(A[0], b[0]), Hyperplane(A[1], b[1])]
    x = planes[0].project([4.0, -3.0, 2.0])
    assert fixed_point_residual(proj(planes[0]), x) <= 1e-14
    assert affine_subspace_distance(A, b, x) > 0.1
    # the pair does reach A
    traj = iterate(proj(*planes), x, constant(1), StopRule(10**4, 1e-15))
    assert affine_subspace_distance(A, b, traj.final) < 1e-9


def test_diminishing_steps_reach_minimizer_of_random_quadratics():
    rng = np.random.default_rng(24)
    for _ in range(20):
        dim = int(rng.integers(1, 6))
        m = dim + int(rng.integers(0, 3))
        terms = [AffineQuadratic(rng.normal(size=dim), rng.normal(), rng.uniform(0.5, 2)) for _ in range(m)]
        N = sum(t.w * np.outer(t.a, t.a) for t in terms)
        mu_min = np.linalg.eigvalsh(N)[0]
        if mu_min < 0.05:
            continue
        xstar = np.linalg.solve(N, sum(t.w * t.b * t.a for t in terms))
        ops = [AgentOperator.proximal(t) for t in terms]
        # harmonic steps contract like k^(-lambda0 * mu_min); keep that exponent >= 2
        sched = harmonic(max(1.0, 2.0 / mu_min))
        traj = iterate(ops, np.zeros(dim), sched, StopRule(2 * 10**5, 1e-11), record_agents=False)
        assert np.linalg.norm(traj.final - xstar) <= 1e-3


def test_constant_steps_are_biased_on_three_agent_scenario():
    h = iterate(EXAMPLE_OPS, [0, 0], harmonic(1.0), StopRule(10**4))
    c = iterate(EXAMPLE_OPS, [0, 0], constant(0.5), StopRule(10**4))
    assert np.linalg.norm(c.final - XSTAR) > np.linalg.norm(h.final - XSTAR)
