"""Edge-count statistics on a labeled similarity graph.

``R1``/``R2`` count edges with both endpoints in the X/Y sample and ``R0``
counts edges joining the two samples. Three statistics are built on them:

* EC  - ``R0``; rejects for small values.
* GEC - Mahalanobis form of ``(R1, R2)`` centered at its permutation mean.
* WEC - ``(m R1 + n R2) / N**2``; rejects for large values.

Permutation-null moments of ``(R1, R2)`` are available three ways: exhaustive
enumeration (the reference), Monte Carlo, and a closed form computed from
graph summaries. The closed form is what the bootstrap uses at scale; the
test-suite checks it against enumeration.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import EnumerationTooLarge, InsufficientDraws, SingleSample, SingularCovariance
from .geometry import LabeledGraph

__all__ = [
    "StatisticKind",
    "EdgeCounts",
    "PermutationMoments",
    "count_edges",
    "within_counts",
    "wec_statistic",
    "wec_values",
    "gec_statistic",
    "gec_values",
    "permutation_moments",
    "permutation_pvalue",
]

MAX_ENUMERATION = 10**6
MIN_DRAWS = 100
# condition-number bound above which Sigma is treated as singular
MAX_CONDITION = 1e12


class StatisticKind(str, enum.Enum):
    EC = "ec"
    GEC = "gec"
    WEC = "wec"

    @classmethod
    def parse(cls, value) -> "StatisticKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class EdgeCounts:
    r0: int
    r1: int
    r2: int
    total_edges: int

    def __post_init__(self):
        if min(self.r0, self.r1, self.r2) < 0 or self.r0 + self.r1 + self.r2 != self.total_edges:
            raise ValueError(f"inconsistent edge counts {self}")


@dataclass(frozen=True)
class PermutationMoments:
    mu1: float
    mu2: float
    sigma: np.ndarray
    method: str
    draws: int | None = None

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2])


def _sizes(labels: np.ndarray) -> tuple[int, int]:
    n = int(np.count_nonzero(labels == 1))
    return n, len(labels) - n


def _check_labels(graph: LabeledGraph) -> np.ndarray:
    if graph.labels is None:
        raise ValueError("graph has no labels attached")
    n, m = _sizes(graph.labels)
    if n == 0 or m == 0:
        raise SingleSample("all nodes carry the same sample label")
    return graph.labels


def within_counts(edges: np.ndarray, is_y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Within-X and within-Y edge counts for one or many labelings.

    ``is_y`` is a boolean array of shape (N,) or (draws, N). Returns ``(r1, r2)``
    as int64 scalars/arrays matching the leading shape.
    """
    a = is_y[..., edges[:, 0]]
    b = is_y[..., edges[:, 1]]
    r2 = np.count_nonzero(a & b, axis=-1)
    r1 = np.count_nonzero(~(a | b), axis=-1)
    return np.asarray(r1, dtype=np.int64), np.asarray(r2, dtype=np.int64)


def count_edges(graph: LabeledGraph) -> EdgeCounts:
    labels = _check_labels(graph)
    r1, r2 = within_counts(graph.edges, labels == 2)
    e = graph.n_edges
    return EdgeCounts(int(e - r1 - r2), int(r1), int(r2), e)


def wec_statistic(counts: EdgeCounts, n: int, m: int) -> float:
    """Weighted edge count ``(1/N) * ((m/N) R1 + (n/N) R2)``."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    big_n = n + m
    # integer numerator, one correctly rounded division
    return (m * counts.r1 + n * counts.r2) / (big_n * big_n)


def wec_values(r1, r2, n: int, m: int) -> np.ndarray:
    big_n = n + m
    num = m * np.asarray(r1, dtype=np.int64) + n * np.asarray(r2, dtype=np.int64)
    return num / float(big_n * big_n)


def _check_sigma(sigma: np.ndarray, cond_max: float) -> None:
    if not np.all(np.isfinite(sigma)):
        raise SingularCovariance("covariance has non-finite entries")
    cond = np.linalg.cond(sigma)
    if not np.isfinite(cond) or cond > cond_max:
        raise SingularCovariance(
            f"permutation covariance is numerically singular (condition number {cond:.3g}); "
            "the graph/label configuration is degenerate"
        )


def gec_values(r1, r2, moments: PermutationMoments, cond_max: float = MAX_CONDITION) -> np.ndarray:
    _check_sigma(moments.sigma, cond_max)
    prec = np.linalg.inv(moments.sigma)
    u = np.asarray(r1, dtype=float) - moments.mu1
    v = np.asarray(r2, dtype=float) - moments.mu2
    return prec[0, 0] * u * u + (prec[0, 1] + prec[1, 0]) * u * v + prec[1, 1] * v * v


def gec_statistic(counts: EdgeCounts, moments: PermutationMoments,
                  cond_max: float = MAX_CONDITION) -> float:
    """Centered quadratic form ``(R - mu)^T Sigma^{-1} (R - mu)`` with ``R = (R1, R2)``."""
    return float(gec_values(counts.r1, counts.r2, moments, cond_max))


def _falling(a: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= a - i
    return out


def _ratio(a: int, b: int, k: int) -> float:
    den = _falling(b, k)
    return _falling(a, k) / den if den else 0.0


def _closed_form(graph: LabeledGraph, n: int, m: int) -> PermutationMoments:
    big_n = n + m
    e = graph.n_edges
    deg = graph.degrees().astype(np.int64)
    shared = int(np.sum(deg * (deg - 1)))      # ordered edge pairs sharing one node
    disjoint = e * (e - 1) - shared             # ordered edge pairs with 4 distinct nodes

    def second_moment(k: int) -> float:
        return e * _ratio(k, big_n, 2) + shared * _ratio(k, big_n, 3) + disjoint * _ratio(k, big_n, 4)

    mu1 = e * _ratio(n, big_n, 2)
    mu2 = e * _ratio(m, big_n, 2)
    cross = 0.0
    if big_n >= 4:
        cross = disjoint * (_falling(n, 2) * _falling(m, 2)) / _falling(big_n, 4)
    v11 = second_moment(n) - mu1 * mu1
    v22 = second_moment(m) - mu2 * mu2
    v12 = cross - mu1 * mu2
    sigma = np.array([[v11, v12], [v12, v22]])
    return PermutationMoments(mu1, mu2, sigma, "closed-form")


def _exact_counts(edges: np.ndarray, n_nodes: int, n: int, chunk: int = 50_000):
    """(r1, r2) for every placement of the n X-labels among the nodes."""
    combos = itertools.combinations(range(n_nodes), n)
    r1s, r2s = [], []
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        is_y = np.ones((len(block), n_nodes), dtype=bool)
        rows = np.repeat(np.arange(len(block)), n)
        is_y[rows, np.asarray(block).ravel()] = False
        r1, r2 = within_counts(edges, is_y)
        r1s.append(r1)
        r2s.append(r2)
    return np.concatenate(r1s), np.concatenate(r2s)


def _random_labelings(n_nodes: int, m: int, draws: int, rng: np.random.Generator,
                      chunk: int = 2000):
    base = np.zeros(n_nodes, dtype=bool)
    base[n_nodes - m:] = True
    for start in range(0, draws, chunk):
        k = min(chunk, draws - start)
        yield rng.permuted(np.tile(base, (k, 1)), axis=1)


def _mc_counts(edges, n_nodes, m, draws, rng):
    r1s, r2s = [], []
    for is_y in _random_labelings(n_nodes, m, draws, rng):
        r1, r2 = within_counts(edges, is_y)
        r1s.append(r1)
        r2s.append(r2)
    return np.concatenate(r1s), np.concatenate(r2s)


def permutation_moments(graph: LabeledGraph, n: int, m: int, mode: str = "closed-form",
                        draws: int | None = None, seed=None) -> PermutationMoments:
    """Mean and covariance of ``(R1, R2)`` under random relabeling.

    Parameters
    ----------
    mode : {"closed-form", "exact", "monte-carlo"}
        ``exact`` enumerates all C(N, n) labelings and is limited to
        ``MAX_ENUMERATION`` of them; ``monte-carlo`` needs ``draws >= 100``.
    """
    big_n = n + m
    if big_n != graph.n_nodes:
        raise ValueError(f"n + m = {big_n} but the graph has {graph.n_nodes} nodes")
    if n < 1 or m < 1:
        raise SingleSample("both samples need at least one observation")
    if mode == "closed-form":
        return _closed_form(graph, n, m)
    if mode == "exact":
        total = comb(big_n, n)
        if total > MAX_ENUMERATION:
            raise EnumerationTooLarge(f"C({big_n}, {n}) = {total} labelings exceeds {MAX_ENUMERATION}")
        r1, r2 = _exact_counts(graph.edges, big_n, n)
        ddof = 0
    elif mode == "monte-carlo":
        if draws is None or draws < MIN_DRAWS:
            raise InsufficientDraws(f"monte-carlo moments need draws >= {MIN_DRAWS}")
        r1, r2 = _mc_counts(graph.edges, big_n, m, draws, np.random.default_rng(seed))
        ddof = 1
    else:
        raise ValueError(f"unknown mode {mode!r}")
    sigma = np.cov(np.vstack([r1, r2]).astype(float), ddof=ddof)
    return PermutationMoments(float(r1.mean()), float(r2.mean()), sigma, mode,
                              draws if mode == "monte-carlo" else None)


def _statistic_values(kind: StatisticKind, r1, r2, n_edges, n, m, moments):
    if kind is StatisticKind.EC:
        return n_edges - np.asarray(r1) - np.asarray(r2)
    if kind is StatisticKind.WEC:
        return wec_values(r1, r2, n, m)
    return gec_values(r1, r2, moments)


def permutation_pvalue(kind, graph: LabeledGraph, n: int, m: int, draws: int | str = 1000,
                       seed=None) -> float:
    """Permutation p-value of the observed statistic, graph held fixed.

    With an integer ``draws`` the p-value is ``(1 + #extreme) / (1 + draws)``,
    where "extreme" means ``>=`` the observed value for GEC/WEC and ``<=`` for
    EC. ``draws="exact"`` enumerates every labeling instead and returns
    ``#extreme / C(N, n)``; the observed labeling is one of those.
    """
    kind = StatisticKind.parse(kind)
    labels = _check_labels(graph)
    if _sizes(labels) != (n, m):
        raise ValueError(f"graph labels give sizes {_sizes(labels)}, expected {(n, m)}")
    moments = _closed_form(graph, n, m) if kind is StatisticKind.GEC else None
    obs = count_edges(graph)
    e = graph.n_edges
    observed = _statistic_values(kind, obs.r1, obs.r2, e, n, m, moments)

    if draws == "exact":
        total = comb(n + m, n)
        if total > MAX_ENUMERATION:
            raise EnumerationTooLarge(f"C({n + m}, {n}) = {total} labelings exceeds {MAX_ENUMERATION}")
        r1, r2 = _exact_counts(graph.edges, n + m, n)
    else:
        draws = int(draws)
        if draws < MIN_DRAWS:
            raise InsufficientDraws(f"permutation p-values need draws >= {MIN_DRAWS}")
        r1, r2 = _mc_counts(graph.edges, n + m, m, draws, np.random.default_rng(seed))
    perm = _statistic_values(kind, r1, r2, e, n, m, moments)
    if kind is StatisticKind.EC:
        hits = int(np.count_nonzero(perm <= observed))
    else:
        hits = int(np.count_nonzero(perm >= observed))
    if draws == "exact":
        return hits / len(perm)
    return (1 + hits) / (1 + len(perm))
