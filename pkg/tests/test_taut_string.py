import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmtv.taut_string import dual_residual, solve, solve_l1_filter

from .oracles import tv_dual_projection, two_sample_grid


def random_instances(count, seed, n_max=12):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, n_max + 1))
        scale = rng.choice([0.1, 1.0, 10.0])
        y = rng.normal(size=n) * scale + rng.choice([0.0, 1.0]) * np.repeat(
            rng.normal(size=3) * 5, [n // 3, n // 3, n - 2 * (n // 3)]
        )
        out.append((y, rng.uniform(0.01, 5.0, n - 1)))
    return out


def oracle_by_length(instances):
    """Run the dual-projection oracle once per sample count."""
    results = [None] * len(instances)
    by_n = {}
    for k, (y, _) in enumerate(instances):
        by_n.setdefault(y.size, []).append(k)
    for idx in by_n.values():
        ys = np.array([instances[k][0] for k in idx])
        ws = np.array([instances[k][1] for k in idx])
        xs = tv_dual_projection(ys, ws)
        for k, x in zip(idx, xs):
            results[k] = x
    return results


def test_constant_signal_is_fixed_point():
    y = np.full(7, 2.5)
    np.testing.assert_array_equal(solve(y, np.linspace(0.1, 3, 6)), y)


@pytest.mark.parametrize("w, expected", [(1.0, [1.0, 3.0]), (2.0, [2.0, 2.0])])
def test_two_samples(w, expected):
    grid = two_sample_grid(0.0, 4.0, w)
    np.testing.assert_allclose(grid, expected, atol=1e-5)
    np.testing.assert_allclose(solve([0.0, 4.0], [w]), expected, atol=1e-14)


def test_single_sample():
    np.testing.assert_array_equal(solve([3.0], []), [3.0])


def test_rejects_bad_weights():
    with pytest.raises(ValueError):
        solve([1.0, 2.0, 3.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        solve([1.0, 2.0, 3.0], [1.0, -1.0])
    with pytest.raises(ValueError):
        solve([1.0, 2.0, 3.0], [1.0, np.inf])
    with pytest.raises(ValueError):
        solve([], [])
    with pytest.raises(ValueError):
        solve([1.0, np.nan], [1.0])


def test_l1_filter_limits():
    rng = np.random.default_rng(7)
    y = rng.normal(size=40) + np.repeat([0.0, 3.0], 20)
    big = solve_l1_filter(y, 1e6 * np.ptp(y))
    np.testing.assert_allclose(big, np.full(40, y.mean()), atol=1e-10)
    np.testing.assert_allclose(solve_l1_filter(y, 1e-12), y, atol=1e-6)
    with pytest.raises(ValueError):
        solve_l1_filter(y, 0.0)


def test_matches_dual_projection_oracle():
    instances = random_instances(150, seed=11)
    for (y, w), ref in zip(instances, oracle_by_length(instances)):
        x = solve(y, w)
        assert np.max(np.abs(x - ref)) <= 1e-8
        assert dual_residual(y, x, w) <= 1e-9 * max(1.0, np.linalg.norm(y))


def test_l1_filter_matches_oracle():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(2, 13))
        y = rng.normal(size=n) * 3
        lam = rng.uniform(0.01, 1.0)
        ref = tv_dual_projection(y, np.full(n - 1, n * lam))[0]
        np.testing.assert_allclose(solve_l1_filter(y, lam), ref, atol=1e-8)


def test_second_pass_can_move_a_nonflat_solution():
    y, w = np.array([2.0, 0.0]), np.array([0.5])
    x = solve(y, w)
    np.testing.assert_allclose(x, [1.5, 0.5])
    np.testing.assert_allclose(solve(x, w), [1.0, 1.0])


def test_nonuniform_weights_can_split_a_segment():
    # scaling non-uniform weights up may add a jump before everything merges
    y = np.zeros(19)
    y[16], y[18] = 0.25, -1.0
    w = np.random.default_rng(0).uniform(0.2, 1.0, 18) * 0.5
    assert [segments(solve(y, t * w), 1e-9) for t in (1, 2)] == [2, 3]
    np.testing.assert_allclose(solve(y, 2 * w), tv_dual_projection(y, 2 * w)[0], atol=1e-8)


def test_distinct_values_can_grow_with_uniform_weights():
    # pieces 1 and 3 share the value 1 at weight 1, then separate
    y = np.array([2.0, 0.0, 0.0, 7.0, 0.0])
    np.testing.assert_allclose(solve(y, np.ones(4)), [1, 1, 1, 5, 1])
    np.testing.assert_allclose(solve(y, np.full(4, 2.0)), [4 / 3, 4 / 3, 4 / 3, 3, 2])
    assert [distinct_values(solve(y, np.full(4, t)), 1e-9) for t in (1.0, 2.0)] == [2, 3]
    assert [segments(solve(y, np.full(4, t)), 1e-9) for t in (1.0, 2.0, 4.0)] == [3, 3, 1]


def test_residual_detects_wrong_answers():
    y = np.array([0.0, 4.0, 1.0, 5.0])
    w = np.ones(3)
    x = solve(y, w)
    assert dual_residual(y, x, w) <= 1e-12
    assert dual_residual(y, x + np.array([0.0, 0.1, 0.0, -0.1]), w) > 1e-3


def test_large_problem_certificate():
    rng = np.random.default_rng(2)
    n = 100_000
    y = np.repeat([0.0, 20.0, 40.0, 10.0], n // 4) + rng.normal(size=n)
    w = rng.uniform(1.0, 30.0, n - 1)
    x = solve(y, w)
    assert dual_residual(y, x, w) <= 1e-9 * np.linalg.norm(y)


signals = arrays(float, st.integers(2, 60), elements=st.floats(-100, 100, allow_nan=False))


@settings(max_examples=150, deadline=None)
@given(signals, st.floats(0.01, 50.0), st.integers(0, 2**31))
def test_properties(y, wscale, seed):
    n = y.size
    w = np.random.default_rng(seed).uniform(0.2, 1.0, n - 1) * wscale
    x = solve(y, w)
    norm = max(1.0, np.linalg.norm(y))
    # optimality system
    assert dual_residual(y, x, w) <= 1e-9 * norm
    # sum is conserved
    assert abs(x.sum() - y.sum()) <= 1e-10 * norm * n
    # the prox is not idempotent in general, but a flat output is a fixed point
    tol = 1e-9 * max(1.0, np.max(np.abs(y)))
    if np.ptp(x) <= tol:
        np.testing.assert_allclose(solve(x, w), x, atol=tol)
    # with uniform weights, segments only merge as the weight grows
    counts = [segments(solve(y, np.full(n - 1, t * wscale)), tol) for t in (1, 2, 4, 8)]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def segments(x, tol):
    return 1 + int(np.sum(np.abs(np.diff(x)) > tol))


def distinct_values(x, tol):
    return 1 + int(np.sum(np.diff(np.sort(x)) > tol))
