"""Slow, independent reference implementations used as test oracles.

Nothing here imports the package under test.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def distance_matrix(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    n = len(p)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = math.sqrt(sum((a - b) ** 2 for a, b in zip(p[i], p[j])))
    return out


def _is_spanning_tree(subset, n) -> bool:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for i, j in subset:
        ri, rj = find(i), find(j)
        if ri == rj:
            return False
        parent[ri] = rj
    return True


def brute_force_mst(dist, excluded=frozenset()) -> frozenset | None:
    """Minimum-weight spanning tree by checking every (N-1)-edge subset."""
    n = len(dist)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in excluded]
    best, best_w = None, math.inf
    for subset in itertools.combinations(edges, n - 1):
        w = sum(dist[i][j] for i, j in subset)
        if w < best_w and _is_spanning_tree(subset, n):
            best, best_w = frozenset(subset), w
    return best


def brute_force_lmst(dist, ell) -> list[frozenset]:
    """Successive edge-disjoint minimum spanning trees, each found exhaustively."""
    used: frozenset = frozenset()
    trees = []
    for _ in range(ell):
        tree = brute_force_mst(dist, used)
        if tree is None:
            break
        trees.append(tree)
        used = used | tree
    return trees


def recount(edges, labels) -> tuple[int, int, int]:
    """(between, within-X, within-Y) edge counts, one edge at a time."""
    r0 = r1 = r2 = 0
    for i, j in edges:
        a, b = labels[i], labels[j]
        if a != b:
            r0 += 1
        elif a == 1:
            r1 += 1
        else:
            r2 += 1
    return r0, r1, r2


def enumerate_counts(edges, n_nodes, n) -> np.ndarray:
    """(R1, R2) for every way of choosing which n nodes belong to X."""
    rows = []
    for xs in itertools.combinations(range(n_nodes), n):
        labels = [2] * n_nodes
        for i in xs:
            labels[i] = 1
        _, r1, r2 = recount(edges, labels)
        rows.append((r1, r2))
    return np.array(rows, dtype=float)


def exact_moments(edges, n_nodes, n):
    """Population mean vector and covariance of (R1, R2) over all labelings."""
    c = enumerate_counts(edges, n_nodes, n)
    mean = c.mean(axis=0)
    dev = c - mean
    return mean, dev.T @ dev / len(c), c


def cutoff_by_definition(stats, alpha):
    """min{s_b : #{r : s_r >= s_b} / B <= alpha}, +inf when the set is empty."""
    b = len(stats)
    ok = [s for s in stats if sum(1 for r in stats if r >= s) / b <= alpha]
    return min(ok) if ok else math.inf
