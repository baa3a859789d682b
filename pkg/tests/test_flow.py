import math

import numpy as np
import pytest

from roughflow.errors import FlowError, InputError
from roughflow.flow import (
    FieldConstants,
    VectorField,
    dilation_field,
    euler_epsilon_solution,
    global_bounds,
    lipschitz_probe,
    probe_pairs,
    residual,
    solve_global,
    solve_local,
    sup_gap,
    verify_solution,
    young_cross_field,
    zero_field,
)
from roughflow.roughpath import Phi, canonical_lift, chen_residual, dist_p, scalar_mul, trivial_path
from roughflow.tangent import young_extension

P, Q = 2.5, 3.0


@pytest.fixture(scope="module")
def start():
    rng = np.random.default_rng(7)
    t = np.linspace(0.0, 1.0, 9)
    return canonical_lift(t, np.cumsum(rng.normal(scale=0.3, size=(9, 2)), axis=0))


@pytest.fixture(scope="module")
def direction():
    rng = np.random.default_rng(8)
    h = np.cumsum(rng.normal(scale=0.05, size=(9, 2)), axis=0)
    return h - h[0]


@pytest.fixture(scope="module")
def young_run(start, direction):
    return euler_epsilon_solution(young_cross_field(direction), start, 1.0, 0.05, P, Q)


def test_zero_field_keeps_state(start):
    sol = euler_epsilon_solution(zero_field(), start, 1.0, 0.1, P, Q, horizon_cap=2.0)
    assert sol.alpha == 2.0 and sol.M == 0.0
    for k in range(sol.n_nodes):
        assert sol.state(k).equals(start)
    assert residual(sol.field, sol, 0.5, 0.25, Q) == 0.0


def test_zero_field_schedule_has_zero_gaps(start):
    sol = solve_local(zero_field(), start, 1.0, [0.1, 0.01, 0.001], P, Q)
    assert [e["sup_dq_gap_to_next"] for e in sol.cauchy_log] == [0.0, 0.0, None]


def test_young_level_one_telescopes(young_run, start, direction):
    for k in range(young_run.n_nodes):
        expected = start.level1 + young_run.taus[k] * direction
        assert np.max(np.abs(young_run.level1[k] - expected)) < 1e-13


def test_young_states_are_multiplicative(young_run):
    assert max(chen_residual(young_run.state(k)) for k in range(0, young_run.n_nodes, 5)) < 1e-12


def test_young_run_invariants_on_all_node_pairs(young_run):
    checks = verify_solution(young_run, pair_budget=None)
    assert checks.ball_ratio <= 1.0
    assert checks.lipschitz_ratio <= 1.0
    assert checks.residual_ratio <= 1.0
    assert checks.passed()


def test_residual_within_a_step_tends_to_zero(young_run):
    k = young_run.n_nodes // 2
    dtau = float(young_run.taus[k + 1] - young_run.taus[k])
    tau = float(young_run.taus[k]) + 0.5 * dtau
    values = [residual(young_run.field, young_run, tau, 2.0**-j * dtau, Q) for j in range(3, 9)]
    assert max(values) <= young_run.eps


def test_residual_range_checked(young_run):
    with pytest.raises(InputError):
        residual(young_run.field, young_run, float(young_run.taus[-1]), 0.1, Q)
    with pytest.raises(InputError):
        residual(young_run.field, young_run, 0.0, -1.0, Q)


def test_young_level_two_against_fine_reference(start, direction, young_run):
    F = young_cross_field(direction)
    fine = euler_epsilon_solution(F, start, 1.0, young_run.eps / 100, P, Q, M=young_run.M)
    assert fine.alpha == young_run.alpha
    assert dist_p(young_run.terminal, fine.terminal, Q) < 5e-4


def test_young_level_two_closed_form(young_run, start, direction):
    F = young_cross_field(direction)
    rep = F(start)
    tau = young_run.alpha
    Y = rep.direction()
    expected = start.level2 + tau * (rep.Z.cross12() + rep.Z.cross21()) + tau**2 * Y.level2
    np.testing.assert_allclose(young_run.terminal.level2, expected, atol=1e-12)


def test_dilation_converges_at_first_order(start):
    sol = solve_local(dilation_field(0.5), start, 1.0, [2.0**-j for j in range(1, 7)], P, Q)
    gaps = [e["sup_dq_gap_to_next"] for e in sol.cauchy_log[:-1]]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    ratios = [b / a for a, b in zip(gaps, gaps[1:])]
    assert all(0.45 < r < 0.55 for r in ratios)
    exact = scalar_mul(math.exp(0.5 * sol.alpha), start)
    assert dist_p(sol.terminal, exact, Q) < 2 * gaps[-1]


def test_two_schedules_agree(start):
    F = dilation_field(0.5)
    a = solve_local(F, start, 1.0, [2.0**-j for j in range(1, 11)], P, Q)
    b = solve_local(F, start, 1.0, [3.0**-j for j in range(1, 8)], P, Q)
    assert a.n_nodes != b.n_nodes
    assert sup_gap(a, b, Q) < 1e-5


def test_schedule_validation(start):
    with pytest.raises(InputError):
        solve_local(zero_field(), start, 1.0, [0.1, 0.2], P, Q)
    with pytest.raises(InputError):
        solve_local(zero_field(), start, 1.0, [], P, Q)


def test_understated_speed_bound_is_rejected(start, direction):
    F = young_cross_field(direction)
    with pytest.raises(FlowError):
        euler_epsilon_solution(F, start, 1.0, 0.1, P, Q, M=1e-3 * F.speed(start, P))


def test_safety_factor_is_inflated_when_needed(start):
    F = dilation_field(2.0)
    sol = euler_epsilon_solution(F, start, 4.0, 0.2, P, Q, safety=1.0)
    assert sol.M > F.speed(start, P)
    assert verify_solution(sol).passed()


def test_zero_field_global_chunk_count(start):
    sol = solve_global(zero_field(), start, 3.5, P, Q, alpha_cap=1.0)
    assert len(sol.chunk_alphas) == 4
    assert sol.terminal.equals(start)


def test_global_run_bounds_and_junctions(start, direction):
    F = young_cross_field(direction)
    sol = solve_global(F, start, 6.0, P, Q, eps=0.2)
    bounds = global_bounds(F, start, P)
    assert sol.taus[-1] >= 6.0 and len(sol.chunk_alphas) >= 2
    assert all(a >= bounds.chunk_bound for a in sol.chunk_alphas)
    assert all(a >= bounds.corrected_bound for a in sol.chunk_alphas)
    assert sol.meta["junction_gaps"] and max(sol.meta["junction_gaps"]) == 0.0
    checks = verify_solution(sol)
    assert checks.passed()


def test_global_needs_declared_constants(start):
    F = VectorField(zero_field()._evaluate, FieldConstants(tangent_p=1.0), name="partial")
    with pytest.raises(InputError, match="declared"):
        solve_global(F, start, 1.0, P, Q)


def test_global_aborts_on_understated_constants(start, direction):
    honest = young_cross_field(direction)
    c = honest.constants
    lying = VectorField(honest._evaluate, FieldConstants(c.tangent_p, c.tangent_q, 1e-6, 0.0, 1e-6, 0.0))
    with pytest.raises(FlowError, match="declared constants violated"):
        solve_global(lying, start, 1.0, P, Q, eps=0.2)


def test_probe_on_constant_output_field(start):
    report = lipschitz_probe(zero_field(), probe_pairs(start, seed=1), P, Q)
    assert report.direction_ratio_p == 0.0 and report.direction_ratio_q == 0.0
    assert report.ratio_p == pytest.approx(1.0, rel=1e-12)
    assert not report.flagged


def test_probe_young_field_within_declared(start, direction):
    F = young_cross_field(direction)
    report = lipschitz_probe(F, probe_pairs(start, seed=2), P, Q)
    assert math.isfinite(report.ratio_p) and not report.flagged


def test_probe_flags_high_gain_phi(start):
    gain = 1e6

    def evaluate(X):
        Z = young_extension(X, np.zeros((X.n_points, X.dim)))
        return Z, Phi(gain * X.level2)

    F = VectorField(evaluate, FieldConstants(tangent_p=1.0, tangent_q=1.0), name="gain")
    report = lipschitz_probe(F, probe_pairs(start, seed=3), P, Q)
    assert report.flagged and report.ratio_p > 1e3


def test_probe_needs_pairs():
    with pytest.raises(InputError):
        lipschitz_probe(zero_field(), [], P, Q)


def test_field_must_keep_its_argument(start):
    F = VectorField(lambda X: (young_extension(trivial_path(X.times, X.dim), np.zeros((9, 2))), Phi.zeros(9, 2)))
    with pytest.raises(InputError):
        F(start)


def test_dilation_constants_hold_on_probe_and_global_run(start):
    F = dilation_field(0.8)
    assert not lipschitz_probe(F, probe_pairs(start, seed=4), P, Q).flagged
    sol = solve_global(F, start, 2.0, P, Q, eps=0.3)
    assert verify_solution(sol).passed()
    # summing the radii up to chunk n only guarantees the corrected bound; on this run
    # the second chunk falls below the uncorrected one
    assert all(a >= sol.meta["corrected_bound"] for a in sol.chunk_alphas)
    assert min(sol.chunk_alphas) < sol.meta["chunk_bound"]
