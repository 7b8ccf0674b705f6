"""Compiled inner loops.

All kernels are single-threaded and use a fixed summation order so results are
bit-identical regardless of how many worker processes the caller spawns.
"""
import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _key_less(w1, a1, b1, w2, a2, b2):
    # strict total order on edges: (length, smaller index, larger index)
    if w1 < w2:
        return True
    if w1 > w2:
        return False
    if a1 < a2:
        return True
    if a1 > a2:
        return False
    return b1 < b2


@njit(cache=True)
def prim_tree(w, out_i, out_j, offset):
    """Dense O(N^2) Prim over ``w``; +inf entries are unusable edges.

    Writes the N-1 tree edges (i < j) into ``out_i/out_j`` starting at
    ``offset``. Returns the total tree length, or -1.0 if the usable edges do
    not connect the graph.
    """
    n = w.shape[0]
    in_tree = np.zeros(n, dtype=np.bool_)
    best_w = np.full(n, np.inf)
    best_a = np.full(n, -1, dtype=np.int64)
    best_b = np.full(n, -1, dtype=np.int64)
    in_tree[0] = True
    cur = 0
    total = 0.0
    for step in range(n - 1):
        sel = -1
        sw = np.inf
        sa = 0
        sb = 0
        row = w[cur]
        for v in range(n):
            if in_tree[v]:
                continue
            x = row[v]
            if x <= best_w[v] and x < np.inf:
                a = min(cur, v)
                b = max(cur, v)
                if best_a[v] < 0 or _key_less(x, a, b, best_w[v], best_a[v], best_b[v]):
                    best_w[v] = x
                    best_a[v] = a
                    best_b[v] = b
            if best_a[v] >= 0 and (
                sel < 0 or _key_less(best_w[v], best_a[v], best_b[v], sw, sa, sb)
            ):
                sel = v
                sw = best_w[v]
                sa = best_a[v]
                sb = best_b[v]
        if sel < 0:
            return -1.0
        in_tree[sel] = True
        out_i[offset + step] = sa
        out_j[offset + step] = sb
        total += sw
        cur = sel
    return total


@njit(cache=True)
def lmst_edges(dist, ell):
    """Union of ``ell`` successively edge-disjoint minimum spanning trees.

    Returns (edges_i, edges_j, tree_lengths); tree_lengths[k] < 0 flags that
    tree k could not be completed.
    """
    n = dist.shape[0]
    w = dist.copy()
    for i in range(n):
        w[i, i] = np.inf
    m = ell * (n - 1)
    ei = np.empty(m, dtype=np.int64)
    ej = np.empty(m, dtype=np.int64)
    lengths = np.empty(ell)
    for k in range(ell):
        off = k * (n - 1)
        t = prim_tree(w, ei, ej, off)
        lengths[k] = t
        if t < 0:
            return ei[:off], ej[:off], lengths[: k + 1]
        for e in range(off, off + n - 1):
            w[ei[e], ej[e]] = np.inf
            w[ej[e], ei[e]] = np.inf
    return ei, ej, lengths


@njit(cache=True)
def nearest_center(x, centers):
    n, d = x.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n)
    for i in range(n):
        bi = 0
        bd = np.inf
        for c in range(k):
            s = 0.0
            for j in range(d):
                t = x[i, j] - centers[c, j]
                s += t * t
            if s < bd:
                bd = s
                bi = c
        labels[i] = bi
        best[i] = bd
    return labels, best


@njit(cache=True)
def lloyd(x, centers, max_iter):
    """Lloyd iterations. Returns (labels, centers, ok); ok is False if a
    cluster emptied out."""
    n, d = x.shape
    k = centers.shape[0]
    centers = centers.copy()
    labels, _ = nearest_center(x, centers)
    for it in range(max_iter):
        sums = np.zeros((k, d))
        counts = np.zeros(k, dtype=np.int64)
        for i in range(n):
            c = labels[i]
            counts[c] += 1
            for j in range(d):
                sums[c, j] += x[i, j]
        for c in range(k):
            if counts[c] == 0:
                return labels, centers, False
            for j in range(d):
                centers[c, j] = sums[c, j] / counts[c]
        new, _ = nearest_center(x, centers)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels, centers, True
