import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from hetero2st.edgecount import (EdgeCounts, PermutationMoments, StatisticKind, count_edges,
                                 gec_statistic, permutation_moments, permutation_pvalue,
                                 wec_statistic)
from hetero2st.errors import (EnumerationTooLarge, InsufficientDraws, SingleSample,
                              SingularCovariance)
from hetero2st.geometry import LabeledGraph, build_lmst, pooled_distances, pooled_lmst
from oracles import enumerate_counts, exact_moments, recount


def graph_of(edges, n_nodes, labels=None):
    g = LabeledGraph(np.array(edges, dtype=np.int64).reshape(-1, 2), n_nodes)
    return g if labels is None else g.with_labels(labels)


PATH3 = [(0, 1), (1, 2)]
PATH4 = [(0, 1), (1, 2), (2, 3)]
PATH6 = [(k, k + 1) for k in range(5)]
TRIANGLE = [(0, 1), (0, 2), (1, 2)]
STAR5 = [(0, k) for k in range(1, 5)]


@st.composite
def labeled_lmsts(draw, max_nodes=8):
    n_nodes = draw(st.integers(3, max_nodes))
    ell = draw(st.integers(1, max(1, n_nodes // 4)))
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, n_nodes - 1))
    p = np.random.default_rng(seed).normal(size=(n_nodes, 2))
    g = build_lmst(pooled_distances(p), ell)
    labels = np.random.default_rng(seed + 1).permutation(np.repeat([1, 2], [n, n_nodes - n]))
    return g.with_labels(labels), n, n_nodes - n


# ---- counts ---------------------------------------------------------------

def test_path_counts():
    c = count_edges(graph_of(PATH3, 3, [1, 1, 2]))
    assert (c.r0, c.r1, c.r2) == (1, 1, 0)


def test_alternating_path_counts():
    c = count_edges(graph_of(PATH4, 4, [1, 2, 1, 2]))
    assert (c.r0, c.r1, c.r2) == (3, 0, 0)


def test_single_sample_rejected():
    with pytest.raises(SingleSample):
        count_edges(graph_of(PATH3, 3, [1, 1, 1]))


@given(labeled_lmsts())
def test_counts_match_recount(case):
    g, _, _ = case
    c = count_edges(g)
    assert (c.r0, c.r1, c.r2) == recount(g.edges.tolist(), g.labels.tolist())
    assert c.r0 + c.r1 + c.r2 == c.total_edges == g.ell * (g.n_nodes - 1)


def test_inconsistent_counts_rejected():
    with pytest.raises(ValueError):
        EdgeCounts(1, 1, 1, 4)


# ---- statistics ------------------------------------------------------------

def test_wec_zero():
    assert wec_statistic(EdgeCounts(10, 0, 0, 10), 5, 6) == 0.0


def test_wec_balanced_reduces_to_half_r_over_n():
    # n = m: each weight is 1/2, so the statistic is (R1 + R2) / (2N)
    assert wec_statistic(EdgeCounts(3, 4, 3, 10), 6, 6) == pytest.approx(7 / 24)


def test_wec_worked_value():
    v = wec_statistic(EdgeCounts(0, 520, 30, 550), 500, 50)
    assert v == pytest.approx((50 / 550 * 520 + 500 / 550 * 30) / 550)
    assert v == pytest.approx(0.13554, abs=5e-6)


@given(labeled_lmsts())
def test_wec_invariant_under_sample_swap(case):
    g, n, m = case
    a = wec_statistic(count_edges(g), n, m)
    b = wec_statistic(count_edges(g.with_labels(3 - g.labels)), m, n)
    assert a == pytest.approx(b, rel=1e-15)


def test_gec_at_mean_is_zero():
    mom = PermutationMoments(4.0, 2.0, np.array([[2.0, 0.5], [0.5, 1.0]]), "closed-form")
    assert gec_statistic(EdgeCounts(4, 4, 2, 10), mom) == 0.0


def test_gec_identity_covariance():
    mom = PermutationMoments(1.0, 2.0, np.eye(2), "closed-form")
    assert gec_statistic(EdgeCounts(3, 4, 6, 13), mom) == pytest.approx(25.0)


def test_gec_on_six_node_path_by_hand():
    labels = [2, 2, 1, 1, 1, 2]
    g = graph_of(PATH6, 6, labels)
    c = count_edges(g)
    assert (c.r1, c.r2) == (2, 1)
    mean, cov, _ = exact_moments(PATH6, 6, 3)
    a, b, d = cov[0, 0], cov[0, 1], cov[1, 1]
    u, v = 2 - mean[0], 1 - mean[1]
    by_hand = (d * u * u - 2 * b * u * v + a * v * v) / (a * d - b * b)
    mom = permutation_moments(g, 3, 3, mode="exact")
    assert gec_statistic(c, mom) == pytest.approx(by_hand, rel=1e-12)
    assert gec_statistic(c, permutation_moments(g, 3, 3)) == pytest.approx(by_hand, rel=1e-10)


def test_gec_singular_covariance():
    g = graph_of(TRIANGLE, 3, [1, 2, 2])
    with pytest.raises(SingularCovariance):
        gec_statistic(count_edges(g), permutation_moments(g, 1, 2))


# ---- moments ---------------------------------------------------------------

def test_triangle_mean():
    mom = permutation_moments(graph_of(TRIANGLE, 3), 2, 1, mode="exact")
    assert mom.mu1 == pytest.approx(1.0)
    assert permutation_moments(graph_of(TRIANGLE, 3), 2, 1).mu1 == pytest.approx(1.0)


def test_single_sample_moments():
    with pytest.raises(SingleSample):
        permutation_moments(graph_of(TRIANGLE, 3), 3, 0)


def test_star_exact_vs_monte_carlo():
    g = graph_of(STAR5, 5)
    ex = permutation_moments(g, 2, 3, mode="exact")
    mc = permutation_moments(g, 2, 3, mode="monte-carlo", draws=100_000, seed=1)
    for mu_ex, mu_mc, var in [(ex.mu1, mc.mu1, ex.sigma[0, 0]), (ex.mu2, mc.mu2, ex.sigma[1, 1])]:
        assert abs(mu_ex - mu_mc) <= 3 * math.sqrt(var / 100_000)


@given(labeled_lmsts())
def test_closed_form_equals_enumeration(case):
    g, n, m = case
    mean, cov, _ = exact_moments(g.edges.tolist(), g.n_nodes, n)
    cf = permutation_moments(g, n, m)
    np.testing.assert_allclose(cf.mean, mean, atol=1e-10)
    np.testing.assert_allclose(cf.sigma, cov, atol=1e-10)
    e, big = g.n_edges, g.n_nodes
    assert cf.mu1 == pytest.approx(e * n * (n - 1) / (big * (big - 1)))
    assert cf.mu2 == pytest.approx(e * m * (m - 1) / (big * (big - 1)))
    assert np.array_equal(cf.sigma, cf.sigma.T)
    assert np.all(np.diag(cf.sigma) >= -1e-12)
    assert 0 <= cf.mu1 <= e and 0 <= cf.mu2 <= e


def test_enumeration_limit():
    p = np.random.default_rng(0).normal(size=(40, 2))
    g = build_lmst(pooled_distances(p), 1)
    with pytest.raises(EnumerationTooLarge):
        permutation_moments(g, 20, 20, mode="exact")


def test_monte_carlo_needs_draws():
    with pytest.raises(InsufficientDraws):
        permutation_moments(graph_of(STAR5, 5), 2, 3, mode="monte-carlo", draws=10)


# ---- p-values --------------------------------------------------------------

def test_extreme_observation_gets_smallest_p():
    # two far-apart groups: every within-sample edge is present for the truth
    rng = np.random.default_rng(2)
    x = rng.normal(size=(30, 2))
    y = rng.normal(size=(30, 2)) + 100
    g = pooled_lmst(x, y, 1)
    assert permutation_pvalue("wec", g, 30, 30, draws=500, seed=0) == pytest.approx(1 / 501)
    assert permutation_pvalue("ec", g, 30, 30, draws=500, seed=0) == pytest.approx(1 / 501)


@pytest.mark.parametrize("kind", ["ec", "gec", "wec"])
def test_exact_pvalue_by_enumeration(kind):
    rng = np.random.default_rng(11)
    g = build_lmst(pooled_distances(rng.normal(size=(6, 2))), 1).with_sizes(3, 3)
    p = permutation_pvalue(kind, g, 3, 3, draws="exact")
    c = enumerate_counts(g.edges.tolist(), 6, 3)
    obs = count_edges(g)
    e = g.n_edges
    if kind == "ec":
        hits = np.sum(e - c[:, 0] - c[:, 1] <= obs.r0)
    elif kind == "wec":
        hits = np.sum(3 * c[:, 0] + 3 * c[:, 1] >= 3 * obs.r1 + 3 * obs.r2)
    else:
        mean, cov, _ = exact_moments(g.edges.tolist(), 6, 3)
        inv = np.linalg.inv(cov)
        dev = c - mean
        q = np.einsum("ij,jk,ik->i", dev, inv, dev)
        o = np.array([obs.r1, obs.r2]) - mean
        hits = np.sum(q >= o @ inv @ o - 1e-9)
    assert p == pytest.approx(hits / 20)


@pytest.mark.parametrize("kind", ["gec", "wec"])
def test_pvalues_uniform_under_exchangeability(kind):
    rng = np.random.default_rng(21)
    ps = []
    for rep in range(500):
        z = rng.normal(size=(40, 2))
        g = pooled_lmst(z[:25], z[25:], 2)
        ps.append(permutation_pvalue(kind, g, 25, 15, draws=200, seed=rep))
    assert stats.kstest(ps, "uniform").pvalue > 0.01


def test_kind_parsing():
    assert StatisticKind.parse("WEC") is StatisticKind.WEC
    with pytest.raises(ValueError):
        StatisticKind.parse("xyz")
