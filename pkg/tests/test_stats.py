"""Tests for group statistics: Kruskal-Wallis, KS normality, group means."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dysmetrics import stats
from dysmetrics.errors import EmptyGroup, ZeroVariance


def test_kruskal_wallis_hand_example():
    # three fully separated groups of 3: H = 12/(9*10) * (6+15+24 ranks...) = 7.2
    groups = [np.array([1.0, 2, 3]), np.array([4.0, 5, 6]), np.array([7.0, 8, 9])]
    result = stats.kruskal_wallis(groups, measurement="demo")
    assert result.h == pytest.approx(7.2, abs=1e-9)
    assert result.df == 2
    assert 0.02 < result.p < 0.03
    assert result.significant


def test_kruskal_wallis_identical_groups():
    groups = [np.array([5.0, 5, 5]), np.array([5.0, 5, 5])]
    result = stats.kruskal_wallis(groups)
    assert result.h == 0.0
    assert result.p == 1.0
    assert not result.significant


def test_kruskal_wallis_matches_scipy():
    rng = np.random.default_rng(3)
    for _ in range(20):
        groups = [rng.normal(loc, 1.0, rng.integers(4, 12)) for loc in (0.0, 0.4, 1.0)]
        ours = stats.kruskal_wallis(groups)
        from scipy.stats import kruskal

        h_ref, p_ref = kruskal(*groups)
        assert ours.h == pytest.approx(h_ref, rel=1e-9)
        assert ours.p == pytest.approx(p_ref, rel=1e-6)


def test_kruskal_wallis_with_ties_matches_scipy():
    from scipy.stats import kruskal

    groups = [
        np.array([1.0, 2.0, 2.0, 3.0]),
        np.array([2.0, 3.0, 3.0, 4.0]),
        np.array([3.0, 4.0, 4.0, 5.0]),
    ]
    ours = stats.kruskal_wallis(groups)
    h_ref, p_ref = kruskal(*groups)
    assert ours.h == pytest.approx(h_ref, rel=1e-9)
    assert ours.p == pytest.approx(p_ref, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 100.0), st.floats(-50.0, 50.0))
def test_kruskal_wallis_monotone_transform_invariance(scale, shift):
    """H depends only on ranks, so any increasing affine map leaves it fixed."""
    rng = np.random.default_rng(11)
    groups = [rng.normal(loc, 1.0, 8) for loc in (0.0, 0.5, 1.2)]
    base = stats.kruskal_wallis(groups).h
    mapped = [g * scale + shift for g in groups]
    assert stats.kruskal_wallis(mapped).h == pytest.approx(base, rel=1e-9)


def test_kruskal_wallis_empty_group():
    with pytest.raises(EmptyGroup):
        stats.kruskal_wallis([np.array([1.0, 2.0]), np.array([])])


def test_ks_normal_sample_accepted():
    # normal quantiles form the best-case sample for a normality test
    from scipy.stats import norm

    n = 200
    sample = norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    d, p, normal = stats.ks_normality(sample)
    assert d < 0.05
    assert normal


def test_ks_uniform_sample_rejected():
    rng = np.random.default_rng(5)
    sample = rng.uniform(0.0, 1.0, 500)
    d, p, normal = stats.ks_normality(sample)
    assert not normal


def test_ks_statistic_matches_brute_force():
    rng = np.random.default_rng(9)
    from scipy.stats import norm

    x = rng.normal(2.0, 3.0, 40)
    d, _, _ = stats.ks_normality(x)
    z = (x - x.mean()) / x.std()
    # scan the empirical CDF against the normal CDF on a dense grid
    grid = np.linspace(z.min() - 1, z.max() + 1, 200001)
    ecdf = np.searchsorted(np.sort(z), grid, side="right") / len(z)
    brute = np.max(np.abs(ecdf - norm.cdf(grid)))
    assert d == pytest.approx(brute, abs=1e-4)


def test_ks_constant_sample_raises():
    with pytest.raises(ZeroVariance):
        stats.ks_normality(np.full(10, 3.0))


def test_group_means_pools_dysarthric():
    rows = [
        ("s1", "healthy", {"f": 1.0}),
        ("s2", "mild", {"f": 2.0}),
        ("s3", "moderate", {"f": 4.0}),
        ("s4", "severe", {"f": 6.0}),
    ]
    table = stats.group_means(rows, ["f"])
    row = table["f"]
    assert row["healthy"] == pytest.approx(1.0)
    assert row["mild"] == pytest.approx(2.0)
    assert row["dys"] == pytest.approx(4.0)  # mean of mild+moderate+severe


def test_group_means_missing_cell_is_none():
    rows = [("s1", "healthy", {"f": 1.0}), ("s2", "mild", {"f": 2.0})]
    table = stats.group_means(rows, ["f"])
    assert table["f"]["severe"] is None


def test_group_means_ignores_nan():
    rows = [
        ("s1", "healthy", {"f": 1.0}),
        ("s2", "healthy", {"f": float("nan")}),
        ("s3", "mild", {"f": 2.0}),
    ]
    table = stats.group_means(rows, ["f"])
    assert table["f"]["healthy"] == pytest.approx(1.0)


def _permutation_pvalue(groups, n_perm=20000, seed=0):
    """Permutation distribution of H, independent of the chi-square approximation."""
    rng = np.random.default_rng(seed)
    pooled = np.concatenate(groups)
    sizes = [len(g) for g in groups]
    h_obs = stats.kruskal_wallis(groups).h
    count = 0
    for _ in range(n_perm):
        rng.shuffle(pooled)
        parts = np.split(pooled, np.cumsum(sizes)[:-1])
        if stats.kruskal_wallis(list(parts)).h >= h_obs - 1e-12:
            count += 1
    return count / n_perm


def test_kruskal_pvalue_close_to_permutation():
    rng = np.random.default_rng(29)
    groups = [rng.normal(0.0, 1.0, 8), rng.normal(1.0, 1.0, 8)]
    p_chi = stats.kruskal_wallis(groups).p
    p_perm = _permutation_pvalue(groups, n_perm=5000)
    assert p_chi == pytest.approx(p_perm, abs=0.05)
