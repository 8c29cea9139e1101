import itertools

import numpy as np
import pytest
import scipy.stats
from hypothesis import given
from hypothesis import strategies as st

from minishrink.indicators import (
    cliffs_delta,
    effect_magnitude,
    hypervolume,
    mann_whitney_u,
    normalization_bounds,
    normalize,
    pfs_contribution,
)


def mc_hypervolume(points, ref, samples, seed=0):
    """Monte-Carlo estimate over the box [0, ref]."""
    rng = np.random.default_rng(seed)
    pts = np.asarray(points)
    hit = 0
    chunk = 1_000_000
    for start in range(0, samples, chunk):
        u = rng.random((min(chunk, samples - start), len(ref))) * ref
        covered = np.zeros(len(u), dtype=bool)
        for p in pts:
            covered |= (u >= p).all(axis=1)
        hit += int(covered.sum())
    return hit / samples * float(np.prod(ref))


# -- hypervolume ---------------------------------------------------------------------


def test_hv_single_box():
    assert hypervolume([(0.5, 0.5)], (1, 1)) == 0.25


def test_hv_inclusion_exclusion():
    assert hypervolume([(0, 0.5), (0.5, 0)], (1, 1)) == pytest.approx(0.75, abs=1e-12)
    pts = [(0.1, 0.7), (0.4, 0.3), (0.8, 0.05)]
    boxes = [(1 - x) * (1 - y) for x, y in pts]
    pair = [(1 - max(a[0], b[0])) * (1 - max(a[1], b[1])) for a, b in itertools.combinations(pts, 2)]
    triple = (1 - 0.8) * (1 - 0.7)
    assert hypervolume(pts, (1, 1)) == pytest.approx(sum(boxes) - sum(pair) + triple, abs=1e-12)


def test_hv_clipping_and_dominated_points():
    assert hypervolume([(2, 0.5)], (1, 1)) == 0.0
    assert hypervolume([(0.5, 0.5), (0.6, 0.6)], (1, 1)) == 0.25
    assert hypervolume([], (1, 1)) == 0.0
    with pytest.raises(ValueError):
        hypervolume([(0.5, 0.5, 0.5)], (1, 1))


def test_hv_three_d_monte_carlo():
    rng = np.random.default_rng(3)
    pts = rng.random((20, 3))
    exact = hypervolume(pts, (1, 1, 1))
    assert exact == pytest.approx(mc_hypervolume(pts, (1, 1, 1), 2_000_000), abs=3e-3)


def test_hv_four_d_grid_oracle():
    # on an integer grid the union volume is an exact count of unit cells
    rng = np.random.default_rng(8)
    pts = rng.integers(0, 4, size=(7, 4))
    grid = np.array(list(itertools.product(range(4), repeat=4)))
    covered = np.zeros(len(grid), dtype=bool)
    for p in pts:
        covered |= (grid >= p).all(axis=1)
    assert hypervolume(pts, (4, 4, 4, 4)) == pytest.approx(covered.sum())


pts2 = st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=8)


@given(front=pts2, extra=st.tuples(st.floats(0, 1), st.floats(0, 1)))
def test_hv_monotone(front, extra):
    assert hypervolume(front + [extra], (1, 1)) >= hypervolume(front, (1, 1)) - 1e-12


def test_normalization():
    ideal, nadir = normalization_bounds([[(1, 10), (3, 4)], [(2, 5), (9, 9)]])
    assert ideal.tolist() == [1, 4] and nadir.tolist() == [3, 10]
    norm = normalize([(2, 7), (1, 1)], ideal, nadir)
    assert norm.points.tolist() == [[0.5, 0.5], [0.0, -0.5]]
    flat = normalize([(5, 1)], [5, 0], [5, 2])
    assert flat.points.tolist() == [[0.0, 0.5]]


# -- PFS --------------------------------------------------------------------------------


def test_pfs_examples():
    assert pfs_contribution({"a": [(1, 2), (2, 1)]}) == {"a": (2, 100.0)}
    assert pfs_contribution({"a": [(1, 1)], "b": [(2, 2)]}) == {"a": (1, 100.0), "b": (0, 0.0)}


def test_pfs_table_fixture():
    # 102 points on one trade-off curve, 39 found by one algorithm and 63 by the other
    front = [(i, 101 - i) for i in range(102)]
    res = pfs_contribution({"nsga2": front[:39], "hybrid-rs": front[39:] + [(50, 60)]})
    assert res["nsga2"][0] == 39 and round(res["nsga2"][1], 2) == 38.24
    assert res["hybrid-rs"][0] == 63 and round(res["hybrid-rs"][1], 2) == 61.76


def test_pfs_shared_points_credit_both():
    res = pfs_contribution({"a": [(1, 2), (2, 1)], "b": [(1, 2)]})
    assert res == {"a": (2, 100.0), "b": (1, 50.0)}
    assert sum(c for c, _ in res.values()) >= 2


# -- statistics ---------------------------------------------------------------------------


def enumerated_p(a, b):
    """Two-sided exact p by enumerating every relabelling of the pooled sample."""
    pooled = a + b
    na = len(a)

    def u_of(xs, ys):
        return sum((x > y) + 0.5 * (x == y) for x in xs for y in ys)

    centre = na * len(b) / 2
    observed = abs(u_of(a, b) - centre)
    total = extreme = 0
    for idx in itertools.combinations(range(len(pooled)), na):
        xs = [pooled[i] for i in idx]
        ys = [pooled[i] for i in range(len(pooled)) if i not in idx]
        total += 1
        extreme += abs(u_of(xs, ys) - centre) >= observed - 1e-9
    return extreme / total


def test_mann_whitney_exact_example():
    u, p = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert u == 0 and p == pytest.approx(0.1, abs=1e-12)
    assert p == pytest.approx(enumerated_p([1, 2, 3], [4, 5, 6]))


def test_mann_whitney_ties_and_identity():
    assert mann_whitney_u([1, 1, 1], [1, 1, 1]) == (4.5, 1.0)
    assert mann_whitney_u([1, 2, 3], [1, 2, 3])[1] == 1.0


@pytest.mark.parametrize("seed", range(5))
def test_mann_whitney_exact_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 6, 5).tolist()
    b = rng.integers(0, 6, 6).tolist()
    assert mann_whitney_u(a, b)[1] == pytest.approx(enumerated_p(a, b), abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_mann_whitney_normal_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    a = np.round(rng.normal(0, 1, 30), 1)
    b = np.round(rng.normal(0.4, 1, 30), 1)
    u, p = mann_whitney_u(a, b)
    ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
    assert u == ref.statistic
    assert p == pytest.approx(ref.pvalue, rel=1e-9)


def test_mann_whitney_empty():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1])


def test_cliffs_delta_examples():
    assert cliffs_delta([1, 2, 3], [4, 5, 6]) == (-1.0, "large")
    assert cliffs_delta([2, 2, 2], [2, 2]) == (0.0, "negligible")
    assert cliffs_delta([1, 2], [1, 3]) == (-0.25, "small")
    with pytest.raises(ValueError):
        cliffs_delta([1], [])


def test_effect_thresholds():
    assert [effect_magnitude(d) for d in (0.1, 0.147, 0.33, 0.474, -0.9)] == [
        "negligible", "small", "medium", "large", "large"
    ]


@given(a=st.lists(st.integers(0, 5), min_size=1, max_size=8), b=st.lists(st.integers(0, 5), min_size=1, max_size=8))
def test_cliffs_delta_antisymmetric(a, b):
    d_ab = cliffs_delta(a, b)[0]
    assert d_ab == -cliffs_delta(b, a)[0]
    brute = sum((x > y) - (x < y) for x in a for y in b) / (len(a) * len(b))
    assert d_ab == pytest.approx(brute)
