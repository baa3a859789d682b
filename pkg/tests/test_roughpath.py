import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_pvar, random_lift, riemann_level2
from roughflow.errors import InputError
from roughflow.roughpath import (
    GridRoughPath,
    Phi,
    canonical_lift,
    chen_residual,
    control_prefix,
    dist_p,
    from_increments,
    level_distance,
    levy_area,
    p_variation,
    q_bound_constant,
    reparameterize,
    resample,
    scalar_mul,
    trivial_path,
)

UNIT_SQUARE = ([0, 1, 2, 3, 4], [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]])


def test_straight_line_level2_is_half_outer():
    v = np.array([2.0, -3.0])
    X = canonical_lift([0.0, 1.0], np.stack([np.zeros(2), v]))
    np.testing.assert_array_equal(X.level2[-1], 0.5 * np.outer(v, v))


def test_unit_square_area():
    X = canonical_lift(*UNIT_SQUARE)
    assert levy_area(X) == 1.0
    oracle = riemann_level2(*UNIT_SQUARE)
    assert abs(0.5 * (oracle[0, 1] - oracle[1, 0]) - 1.0) < 1e-9


def test_l_path_area_is_half():
    X = canonical_lift([0, 1, 2], [[0, 0], [1, 0], [1, 1]])
    assert levy_area(X) == 0.5


def test_lift_matches_riemann_oracle(rng):
    t = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 5)]))
    x = rng.normal(size=(7, 3))
    X = canonical_lift(t, x)
    np.testing.assert_allclose(X.level2[-1], riemann_level2(t, x), atol=1e-6)


def test_lift_shifts_times_to_zero():
    X = canonical_lift([2.0, 3.0, 5.0], [[0.0], [1.0], [0.0]])
    np.testing.assert_array_equal(X.times, [0.0, 1.0, 3.0])


@pytest.mark.parametrize(
    "times, points",
    [([0.0, 0.0, 1.0], [[0], [1], [2]]), ([0.0], [[0]]), ([0.0, 1.0], [[0], [1], [2]])],
)
def test_lift_rejects_bad_input(times, points):
    with pytest.raises(InputError):
        canonical_lift(times, points)


def test_grid_must_start_at_identity():
    with pytest.raises(InputError):
        GridRoughPath([0.0, 1.0], [[1.0], [2.0]], np.zeros((2, 1, 1)))
    with pytest.raises(InputError):
        GridRoughPath([0.5, 1.0], np.zeros((2, 1)), np.zeros((2, 1, 1)))


def test_chen_on_random_lifts(rng):
    for _ in range(10):
        X = random_lift(rng, scale=0.3)
        assert chen_residual(X) < 1e-12


def test_sampled_chen_check_agrees_with_exhaustive(rng):
    X = random_lift(rng, n_seg=30, dim=3, scale=0.2)
    assert chen_residual(X, max_triples=300, seed=1) < 1e-12
    assert chen_residual(X) < 1e-12


@pytest.mark.parametrize("seed", range(50))
def test_pvariation_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n_points = int(rng.integers(2, 11))
    X = random_lift(rng, n_seg=n_points - 1, dim=int(rng.integers(1, 4)))
    p = float(rng.uniform(2.05, 2.95))
    for level in (1, 2):
        expected = brute_force_pvar(X, p, level)
        assert abs(p_variation(X, p, level) - expected) <= 1e-13 * max(1.0, expected)


def test_pvariation_of_line_is_length():
    X = canonical_lift([0, 1, 2], [[0.0], [1.0], [3.0]])
    assert p_variation(X, 2.5, 1) == pytest.approx(3.0, rel=1e-15)
    assert p_variation(X, 2.5, 2) == pytest.approx(4.5, rel=1e-15)


def test_p_outside_range_rejected():
    X = canonical_lift([0, 1], [[0.0], [1.0]])
    for p in (2.0, 3.0, 1.5):
        with pytest.raises(InputError):
            p_variation(X, p, 1)
    with pytest.raises(InputError):
        dist_p(X, X, 4.5)


def test_distance_identity_and_mismatch(rng):
    X = random_lift(rng, n_seg=5, dim=2)
    assert dist_p(X, X, 2.5) == 0.0
    with pytest.raises(InputError):
        dist_p(X, random_lift(rng, n_seg=5, dim=3), 2.5)
    with pytest.raises(InputError):
        dist_p(X, random_lift(rng, n_seg=6, dim=2), 2.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_distance_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    t = np.arange(n, dtype=float)
    X, Y, Z = (canonical_lift(t, rng.normal(size=(n, 2))) for _ in range(3))
    for p in (2.3, 3.5):
        assert dist_p(X, Z, p) <= dist_p(X, Y, p) + dist_p(Y, Z, p) + 1e-12
        assert dist_p(X, Y, p) == pytest.approx(dist_p(Y, X, p), rel=1e-14, abs=0)


@pytest.mark.parametrize("p, q", [(2.2, 2.9), (2.5, 3.0), (2.9, 3.5)])
def test_q_distance_bound(rng, p, q):
    for _ in range(20):
        n = int(rng.integers(2, 20))
        t = np.arange(n, dtype=float)
        base = rng.normal(size=(n, 2))
        X = canonical_lift(t, base)
        Y = canonical_lift(t, base + rng.normal(scale=10.0 ** rng.uniform(-3, 0), size=(n, 2)))
        dq = dist_p(X, Y, q)
        bound = q_bound_constant(X, Y, p, q) * dist_p(X, Y, p) ** (p / q)
        assert dq <= bound * (1 + 1e-12)


def test_reparameterize_gives_holder_bounds(rng):
    p = 2.5
    for _ in range(5):
        X = random_lift(rng, n_seg=12, dim=2)
        R, tau = reparameterize(X, p)
        assert tau[0] == 0.0 and tau[-1] == X.horizon
        omega_T = control_prefix(X, p)[-1]
        rate = omega_T / X.horizon
        for i in range(R.n_points):
            for j in range(i + 1, R.n_points):
                inc = R.increment(i, j)
                gap = tau[j] - tau[i]
                assert np.linalg.norm(inc.level1) <= (rate * gap) ** (1 / p) * (1 + 1e-12)
                assert np.linalg.norm(inc.level2) <= (rate * gap) ** (2 / p) * (1 + 1e-12)


def test_reparameterize_reports_constant_interval():
    X = canonical_lift([0, 1, 2, 3], [[0.0], [1.0], [1.0], [2.0]])
    with pytest.raises(InputError, match="interval 1"):
        reparameterize(X, 2.5)


def test_resample_keeps_old_points_and_chen(rng):
    X = random_lift(rng, n_seg=4, dim=2)
    extra = np.sort(rng.uniform(0, X.horizon, 5))
    grid = np.unique(np.concatenate([X.times, extra]))
    R = resample(X, grid)
    assert chen_residual(R) < 1e-12
    idx = np.searchsorted(grid, X.times)
    np.testing.assert_allclose(R.level1[idx], X.level1, atol=1e-13)
    np.testing.assert_allclose(R.level2[idx], X.level2, atol=1e-13)


def test_resample_of_lift_is_lift_of_resampled_points(rng):
    t = np.array([0.0, 1.0, 3.0])
    x = rng.normal(size=(3, 2))
    grid = np.array([0.0, 0.5, 1.0, 2.0, 2.5, 3.0])
    fine = np.stack([np.interp(grid, t, x[:, c]) for c in range(2)], axis=1)
    np.testing.assert_allclose(resample(canonical_lift(t, x), grid).level2, canonical_lift(grid, fine).level2, atol=1e-13)


def test_scalar_mul_and_from_increments_roundtrip(rng):
    X = random_lift(rng, n_seg=5, dim=2)
    inc = [X.increment(k, k + 1) for k in range(5)]
    Y = from_increments(X.times, np.array([g.level1 for g in inc]), np.array([g.level2 for g in inc]))
    np.testing.assert_allclose(Y.level2, X.level2, atol=1e-12)
    S = scalar_mul(-2.0, X)
    assert level_distance(S, trivial_path(X.times, 2), 2.5, 2) == pytest.approx(
        4 * level_distance(X, trivial_path(X.times, 2), 2.5, 2), rel=1e-12
    )


def test_phi_additivity_check():
    table = np.zeros((3, 3, 1, 1))
    table[0, 1] = table[1, 2] = 1.0
    table[0, 2] = 2.0
    np.testing.assert_array_equal(Phi.from_pair_values(table).values[:, 0, 0], [0.0, 1.0, 2.0])
    table[0, 2] = 2.5
    with pytest.raises(InputError, match="not additive"):
        Phi.from_pair_values(table)
