"""Bootstrap calibration of edge-count tests under a composite mixture null.

The null says the Y distribution is some mixture of the baseline's latent
subgroups, with arbitrary weights. Calibration works on the baseline sample
alone:

1. estimate the number of subgroups with prediction strength and cluster the
   baseline with k-means;
2. repeatedly pick mixing weights, draw ``ceil(m * lambda_a)`` rows without
   replacement from each cluster as a surrogate Y, and keep the rest as a
   surrogate X;
3. evaluate the statistic on each surrogate pair and take the empirical
   upper-alpha point of the ensemble as the cutoff.

Surrogate Y and surrogate X always partition the baseline rows, so the pooled
surrogate sample is the baseline itself in every round. Its l-MST is therefore
built once (rows in baseline order) and each round only relabels nodes.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .edgecount import (
    StatisticKind,
    _closed_form,
    count_edges,
    gec_statistic,
    gec_values,
    wec_statistic,
    wec_values,
    within_counts,
)
from .errors import (
    DimensionMismatch,
    EmptyClusterUnrecoverable,
    InsufficientDraws,
    TooFewPoints,
    TooManyInfeasibleRounds,
)
from .geometry import LabeledGraph, as_points, build_lmst, pairwise_distances, pooled_distances

__all__ = [
    "ClusterModel",
    "MixingWeights",
    "BootstrapConfig",
    "SurrogateSplit",
    "BootstrapResult",
    "TestReport",
    "kmeans",
    "prediction_strength",
    "estimate_num_clusters",
    "cluster_baseline",
    "sample_mixing_weights",
    "bootstrap_surrogate_split",
    "cutoff_from_ensemble",
    "bootstrap_cutoff",
    "heterogeneous_test",
    "heterogeneous_tests",
]

WEIGHT_MODES = ("corner", "dirichlet")


# --------------------------------------------------------------------------
# clustering

def _kmeanspp(x, k, rng):
    n = len(x)
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    _, d2 = _kernels.nearest_center(x, centers[:1])
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[c] = x[idx]
        _, dc = _kernels.nearest_center(x, centers[c:c + 1])
        d2 = np.minimum(d2, dc)
    return centers


def kmeans(x, k: int, rng: np.random.Generator, max_iter: int = 100, n_init: int = 1,
           max_restarts: int = 10):
    """Lloyd's algorithm from k-means++ seeds.

    Runs ``n_init`` successful initialisations and keeps the one with the
    lowest within-cluster sum of squares. An initialisation that ends with an
    empty cluster is re-seeded; more than ``max_restarts`` such failures raise
    :class:`EmptyClusterUnrecoverable`.

    Returns ``(labels, centers)`` with 0-based labels.
    """
    best = None
    failures = 0
    done = 0
    while done < n_init:
        labels, centers, ok = _kernels.lloyd(x, _kmeanspp(x, k, rng), max_iter)
        if ok:
            labels, d2 = _kernels.nearest_center(x, centers)
            if np.bincount(labels, minlength=k).min() > 0:
                done += 1
                inertia = float(d2.sum())
                if best is None or inertia < best[0]:
                    best = (inertia, labels, centers)
                continue
        failures += 1
        if failures > max_restarts:
            raise EmptyClusterUnrecoverable(
                f"k-means with k={k} kept producing an empty cluster after {max_restarts} restarts"
            )
    return best[1], best[2]


def prediction_strength(train, test, k: int, rng: np.random.Generator, max_iter: int = 100,
                        n_init: int = 1) -> float:
    """Prediction strength of a k-cluster solution (Tibshirani & Walther).

    Both halves are clustered; for every test cluster we take the fraction of
    its point pairs that the training centroids also put together. The
    minimum over test clusters is returned. Singleton test clusters carry no
    pairs and are skipped; if nothing is left, or a half has fewer than ``k``
    distinct points, the strength is 0.
    """
    if k == 1:
        return 1.0
    if len(np.unique(train, axis=0)) < k or len(np.unique(test, axis=0)) < k:
        return 0.0
    try:
        test_labels, _ = kmeans(test, k, rng, max_iter, n_init)
        _, train_centers = kmeans(train, k, rng, max_iter, n_init)
    except EmptyClusterUnrecoverable:
        return 0.0
    predicted, _ = _kernels.nearest_center(test, train_centers)
    worst = None
    for j in range(k):
        members = predicted[test_labels == j]
        nj = len(members)
        if nj < 2:
            continue
        c = np.bincount(members, minlength=k).astype(float)
        ps = float((c * (c - 1)).sum() / (nj * (nj - 1)))
        worst = ps if worst is None else min(worst, ps)
    return 0.0 if worst is None else worst


def estimate_num_clusters(x, kmax: int = 10, ps_threshold: float = 0.8, seed=None,
                          n_init: int = 1, n_splits: int = 1, return_strengths: bool = False):
    """Largest k in 1..kmax whose prediction strength reaches ``ps_threshold``.

    The sample is split at random into two halves; with ``n_splits > 1`` the
    prediction strength is averaged over that many independent splits.
    ``ps(1) = 1`` so the answer is at least 1.
    """
    x = as_points(x)
    n = len(x)
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    if n < 2 * kmax:
        raise TooFewPoints(f"prediction strength with kmax={kmax} needs n >= {2 * kmax}, got n={n}")
    if n_splits < 1:
        raise ValueError("n_splits must be >= 1")
    rng = np.random.default_rng(seed)
    strengths = np.zeros(kmax)
    for _ in range(n_splits):
        perm = rng.permutation(n)
        train, test = x[perm[: n // 2]], x[perm[n // 2:]]
        strengths += [prediction_strength(train, test, k, rng, n_init=n_init)
                      for k in range(1, kmax + 1)]
    strengths /= n_splits
    k_hat = max(k for k, ps in enumerate(strengths, start=1) if ps >= ps_threshold)
    if return_strengths:
        return k_hat, strengths
    return k_hat


@dataclass
class ClusterModel:
    """Hard partition of the baseline rows.

    ``assignments`` holds 0-based class indices; ``members[a]`` lists the row
    indices of class ``a`` in increasing order.
    """

    k_hat: int
    assignments: np.ndarray
    centroids: np.ndarray

    @property
    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k_hat)

    @property
    def members(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assignments == a) for a in range(self.k_hat)]


def cluster_baseline(x, k_hat: int, seed=None, max_iter: int = 100, n_init: int = 1) -> ClusterModel:
    x = as_points(x)
    if k_hat < 1:
        raise ValueError("k_hat must be >= 1")
    if len(x) < k_hat:
        raise TooFewPoints(f"cannot form {k_hat} clusters from {len(x)} points")
    if k_hat == 1:
        return ClusterModel(1, np.zeros(len(x), dtype=np.int64), x.mean(axis=0, keepdims=True))
    labels, centers = kmeans(x, k_hat, np.random.default_rng(seed), max_iter, n_init)
    return ClusterModel(k_hat, labels.astype(np.int64), centers)


# --------------------------------------------------------------------------
# bootstrap rounds

@dataclass(frozen=True)
class MixingWeights:
    lambdas: np.ndarray
    mode: str


def sample_mixing_weights(k_hat: int, mode: str = "corner", round_index: int = 1,
                          seed=None) -> MixingWeights:
    """Mixing weights for bootstrap round ``round_index`` (1-based).

    ``corner`` cycles deterministically through the simplex corners, so round
    b puts all weight on class ``(b - 1) mod k_hat``. ``dirichlet`` draws
    uniformly from the simplex.
    """
    if k_hat < 1:
        raise ValueError("k_hat must be >= 1")
    lam = np.zeros(k_hat)
    if mode == "corner":
        lam[(round_index - 1) % k_hat] = 1.0
    elif mode == "dirichlet":
        lam = np.random.default_rng(seed).dirichlet(np.ones(k_hat))
    else:
        raise ValueError(f"weight mode must be one of {WEIGHT_MODES}, got {mode!r}")
    return MixingWeights(lam, mode)


def _draw_sizes(lambdas, m):
    # round first so e.g. 50 * 0.3 = 15.000000000000002 does not ceil to 16
    return np.ceil(np.round(m * np.asarray(lambdas), 9)).astype(np.int64)


@dataclass
class SurrogateSplit:
    """Row indices (into the baseline) of the surrogate Y and residual X."""

    y_rows: np.ndarray
    x_rows: np.ndarray
    source: np.ndarray = field(repr=False)

    @property
    def surrogate_y(self) -> np.ndarray:
        return self.source[self.y_rows]

    @property
    def residual_x(self) -> np.ndarray:
        return self.source[self.x_rows]


def bootstrap_surrogate_split(model: ClusterModel, x, weights: MixingWeights, m: int,
                              seed=None) -> SurrogateSplit | None:
    """Draw ``ceil(m * lambda_a)`` rows from each class without replacement.

    Returns ``None`` when some class is too small for its draw; the caller is
    expected to pick new weights and try again.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    x = as_points(x)
    sizes = _draw_sizes(weights.lambdas, m)
    members = model.members
    if any(s > len(rows) for s, rows in zip(sizes, members)):
        return None
    rng = np.random.default_rng(seed)
    picked = [rng.choice(rows, size=s, replace=False) for s, rows in zip(sizes, members) if s > 0]
    is_y = np.zeros(len(x), dtype=bool)
    if picked:
        is_y[np.concatenate(picked)] = True
    return SurrogateSplit(np.flatnonzero(is_y), np.flatnonzero(~is_y), x)


def cutoff_from_ensemble(stats, alpha: float) -> float:
    """Smallest ensemble value ``s`` with ``#{stats >= s} / B <= alpha``.

    Returns ``inf`` when no value qualifies, in which case nothing is ever
    rejected.
    """
    s = np.sort(np.asarray(stats, dtype=float))
    b = len(s)
    if b == 0:
        return np.inf
    n_ge = b - np.searchsorted(s, s, side="left")
    ok = n_ge <= alpha * b
    return float(s[ok].min()) if ok.any() else np.inf


@dataclass
class BootstrapConfig:
    b_rounds: int = 200
    alpha: float = 0.05
    ell: int = 5
    weight_mode: str = "corner"
    kmax: int = 10
    ps_threshold: float = 0.8
    seed: int | None = None
    kmeans_iter: int = 100
    kmeans_init: int = 5
    ps_splits: int = 1
    attempt_factor: int = 20

    def __post_init__(self):
        if self.b_rounds < 50:
            raise ValueError("b_rounds must be >= 50")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}")
        if self.kmax < 1:
            raise ValueError("kmax must be >= 1")
        if self.ps_splits < 1:
            raise ValueError("ps_splits must be >= 1")
        if not 0 < self.ps_threshold <= 1:
            raise ValueError("ps_threshold must lie in (0, 1]")


@dataclass
class BootstrapResult:
    cutoff: float
    stats: np.ndarray
    k_hat: int
    feasible_rounds: int
    attempts: int
    model: ClusterModel = field(repr=False)


def _seed_tree(seed):
    root = np.random.SeedSequence(seed)
    ps_ss, km_ss, rounds_ss = root.spawn(3)
    return root, ps_ss, km_ss, rounds_ss


def _round_rng(rounds_ss: np.random.SeedSequence, t: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(rounds_ss.entropy, spawn_key=rounds_ss.spawn_key + (t,))
    )


def _ensemble(x, m: int, kinds, cfg: BootstrapConfig, seeds, graph: LabeledGraph | None = None):
    """Bootstrap statistics for each kind in ``kinds`` from one set of rounds."""
    n = len(x)
    if n < 2:
        raise TooFewPoints(f"the baseline sample x needs at least 2 rows, got n={n}")
    if m >= n:
        raise InsufficientDraws(f"m={m} must be smaller than the baseline size n={n}")
    _, ps_ss, km_ss, rounds_ss = seeds
    kmax = min(cfg.kmax, n // 2)
    if kmax < 1:
        raise TooFewPoints(f"baseline needs at least 2 rows, got {n}")
    k_hat = estimate_num_clusters(x, kmax, cfg.ps_threshold, ps_ss, n_init=cfg.kmeans_init,
                                  n_splits=cfg.ps_splits)
    model = cluster_baseline(x, k_hat, km_ss, cfg.kmeans_iter, cfg.kmeans_init)
    if graph is None:
        graph = build_lmst(pooled_distances(x), cfg.ell)

    members = model.members
    if cfg.weight_mode == "corner" and all(len(r) < m for r in members):
        raise TooManyInfeasibleRounds(
            f"every estimated cluster is smaller than m={m} (sizes {sorted(map(len, members))}); "
            "m is too large relative to the clusters"
        )
    stats = {k: [] for k in kinds}
    moments_cache = {}
    attempts = 0
    max_attempts = cfg.attempt_factor * cfg.b_rounds
    feasible = 0
    while feasible < cfg.b_rounds and attempts < max_attempts:
        attempts += 1
        rng = _round_rng(rounds_ss, attempts)
        weights = sample_mixing_weights(k_hat, cfg.weight_mode, attempts, rng)
        split = bootstrap_surrogate_split(model, x, weights, m, rng)
        if split is None:
            continue
        feasible += 1
        is_y = np.zeros(n, dtype=bool)
        is_y[split.y_rows] = True
        r1, r2 = within_counts(graph.edges, is_y)
        my = len(split.y_rows)
        nx = n - my
        for kind in kinds:
            if kind is StatisticKind.WEC:
                stats[kind].append(float(wec_values(r1, r2, nx, my)))
            elif kind is StatisticKind.GEC:
                if my not in moments_cache:
                    moments_cache[my] = _closed_form(graph, nx, my)
                stats[kind].append(float(gec_values(r1, r2, moments_cache[my])))
            else:
                raise ValueError(f"bootstrap calibration supports GEC and WEC, not {kind.name}")
    if feasible < 0.5 * cfg.b_rounds:
        raise TooManyInfeasibleRounds(
            f"only {feasible} of {cfg.b_rounds} bootstrap rounds were feasible after {attempts} "
            f"attempts; m={m} is too large relative to the smallest cluster "
            f"(sizes {sorted(map(len, members))})"
        )
    return {k: np.asarray(v) for k, v in stats.items()}, model, feasible, attempts


def bootstrap_cutoff(x, m: int, kind="wec", cfg: BootstrapConfig | None = None) -> BootstrapResult:
    """Level-``alpha`` cutoff for a GEC or WEC statistic from the baseline alone."""
    cfg = cfg or BootstrapConfig()
    kind = StatisticKind.parse(kind)
    x = as_points(x)
    stats, model, feasible, attempts = _ensemble(x, m, [kind], cfg, _seed_tree(cfg.seed))
    s = stats[kind]
    return BootstrapResult(cutoff_from_ensemble(s, cfg.alpha), s, model.k_hat, feasible,
                           attempts, model)


# --------------------------------------------------------------------------
# end-to-end test

@dataclass
class TestReport:
    __test__ = False  # keep pytest from collecting this as a test class

    statistic: str
    observed: float
    cutoff: float
    p_value: float
    reject: bool
    k_hat: int
    feasible_rounds: int
    attempts: int
    n: int
    m: int
    alpha: float
    b_rounds: int
    ell: int
    weight_mode: str
    seed: int
    wall_time_s: float

    @property
    def decision(self) -> str:
        return "reject" if self.reject else "retain"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["decision"] = self.decision
        # JSON has no infinity
        d["cutoff"] = None if not np.isfinite(self.cutoff) else self.cutoff
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        d = dict(d)
        d.pop("decision", None)
        if d.get("cutoff") is None:
            d["cutoff"] = float("inf")
        return cls(**d)


def heterogeneous_tests(x, y, kinds=("wec",), cfg: BootstrapConfig | None = None,
                        observed_graph: LabeledGraph | None = None) -> list[TestReport]:
    """Run several bootstrap-calibrated tests that share one bootstrap ensemble.

    ``observed_graph`` may pass in an already built l-MST of the pooled
    sample (x rows first, built with ``cfg.ell``) to avoid rebuilding it.
    """
    cfg = cfg or BootstrapConfig()
    kinds = [StatisticKind.parse(k) for k in kinds]
    x = as_points(x, "x")
    y = as_points(y, "y")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"x has d={x.shape[1]} but y has d={y.shape[1]}")
    n, m = len(x), len(y)
    if n <= m:
        warnings.warn(
            f"baseline x (n={n}) is not larger than y (m={m}); the calibration explores x",
            stacklevel=2,
        )
    t0 = time.perf_counter()
    seeds = _seed_tree(cfg.seed)
    if observed_graph is None:
        observed_graph = build_lmst(pairwise_distances(x, y), cfg.ell)
    observed_graph = observed_graph.with_sizes(n, m)
    counts = count_edges(observed_graph)
    stats, model, feasible, attempts = _ensemble(x, m, kinds, cfg, seeds)
    elapsed = time.perf_counter() - t0

    reports = []
    for kind in kinds:
        if kind is StatisticKind.WEC:
            obs = wec_statistic(counts, n, m)
        else:
            obs = gec_statistic(counts, _closed_form(observed_graph, n, m))
        s = stats[kind]
        cut = cutoff_from_ensemble(s, cfg.alpha)
        p = (1 + int(np.count_nonzero(s >= obs))) / (1 + len(s))
        reports.append(TestReport(
            statistic="b" + kind.value, observed=float(obs), cutoff=cut, p_value=p,
            reject=bool(obs > cut), k_hat=model.k_hat, feasible_rounds=feasible,
            attempts=attempts, n=n, m=m, alpha=cfg.alpha, b_rounds=cfg.b_rounds, ell=cfg.ell,
            weight_mode=cfg.weight_mode, seed=int(seeds[0].entropy), wall_time_s=elapsed,
        ))
    return reports


def heterogeneous_test(x, y, kind="wec", cfg: BootstrapConfig | None = None) -> TestReport:
    """Test whether y's distribution is a re-weighting of x's latent subgroups.

    The observed statistic is computed on the l-MST of the pooled real
    sample and compared with the bootstrap cutoff built from ``x`` alone.
    """
    return heterogeneous_tests(x, y, [kind], cfg)[0]
