"""Pairwise distances and l-MST construction over a pooled two-sample set."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from . import _kernels
from .errors import (
    DimensionMismatch,
    DisconnectedAfterExclusion,
    GraphTooSmall,
    NonFiniteInput,
)

__all__ = [
    "as_points",
    "DistanceMatrix",
    "LabeledGraph",
    "pairwise_distances",
    "pooled_distances",
    "build_lmst",
    "pooled_lmst",
]


def as_points(x, name="x") -> np.ndarray:
    """Validate and return ``x`` as a C-contiguous float64 (n, d) array.

    1-d input is read as n points in one dimension.
    """
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty (n, d) array, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return np.ascontiguousarray(a)


@dataclass(frozen=True)
class DistanceMatrix:
    dist: np.ndarray
    metric: str = "euclidean"

    @property
    def n_nodes(self) -> int:
        return self.dist.shape[0]


@dataclass
class LabeledGraph:
    """Undirected edge list over N nodes plus per-node sample labels.

    ``edges`` is an (E, 2) int array with ``i < j`` in every row. ``labels``
    holds 1 for the X sample and 2 for the Y sample, or is ``None`` until the
    caller attaches them. ``tree_lengths`` records the total length of each of
    the ``ell`` spanning trees in construction order.
    """

    edges: np.ndarray
    n_nodes: int
    ell: int = 1
    labels: np.ndarray | None = None
    tree_lengths: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def with_labels(self, labels) -> "LabeledGraph":
        labels = np.asarray(labels, dtype=np.int8)
        if labels.shape != (self.n_nodes,):
            raise ValueError(f"need {self.n_nodes} labels, got shape {labels.shape}")
        if not np.isin(labels, (1, 2)).all():
            raise ValueError("labels must be 1 (X sample) or 2 (Y sample)")
        return LabeledGraph(self.edges, self.n_nodes, self.ell, labels, self.tree_lengths)

    def with_sizes(self, n: int, m: int) -> "LabeledGraph":
        """Attach labels for the pooled order: first ``n`` nodes X, next ``m`` Y."""
        if n + m != self.n_nodes:
            raise ValueError(f"n + m = {n + m} does not match {self.n_nodes} nodes")
        return self.with_labels(np.repeat(np.array([1, 2], dtype=np.int8), [n, m]))

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)


def pairwise_distances(x, y) -> DistanceMatrix:
    """Euclidean distance matrix over the pooled sample, X rows first."""
    x = as_points(x, "x")
    y = as_points(y, "y")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"x has d={x.shape[1]} but y has d={y.shape[1]}")
    return pooled_distances(np.vstack([x, y]))


def pooled_distances(z) -> DistanceMatrix:
    z = as_points(z, "z")
    if len(z) == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    return DistanceMatrix(squareform(pdist(z)))


def build_lmst(dist: DistanceMatrix | np.ndarray, ell: int = 1) -> LabeledGraph:
    """Union of ``ell`` successively edge-disjoint minimum spanning trees.

    Tree k is the MST of the complete graph with the edges of trees 1..k-1
    removed. Edges are ordered by (length, i, j), which makes every tree
    unique even when distances tie.

    Raises
    ------
    GraphTooSmall
        If there are not more nodes than ``ell``.
    DisconnectedAfterExclusion
        If removing earlier trees leaves too few edges for another spanning
        tree (the complete graph on N nodes holds at most N // 2 disjoint
        spanning trees).
    """
    d = dist.dist if isinstance(dist, DistanceMatrix) else np.asarray(dist, dtype=float)
    n = d.shape[0]
    ell = int(ell)
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if n < 2 or n <= ell:
        raise GraphTooSmall(f"need more than ell={ell} nodes (and at least 2), got {n}")
    ei, ej, lengths = _kernels.lmst_edges(np.ascontiguousarray(d, dtype=float), ell)
    if len(lengths) < ell or lengths[-1] < 0:
        raise DisconnectedAfterExclusion(
            f"could only build {len(lengths) - 1} of {ell} disjoint spanning trees on {n} nodes"
        )
    return LabeledGraph(np.column_stack([ei, ej]), n, ell, tree_lengths=lengths)


def pooled_lmst(x, y, ell: int = 1) -> LabeledGraph:
    """l-MST of the pooled sample with labels 1 (first n rows) and 2 attached."""
    x = as_points(x, "x")
    y = as_points(y, "y")
    g = build_lmst(pairwise_distances(x, y), ell)
    return g.with_sizes(len(x), len(y))
