"""Replicated simulation runs producing rejection-rate tables.

Every replication draws its own seeds from ``SeedSequence(plan.seed,
spawn_key=(n, m, d, rep))``, so a cell's results do not depend on the rest of
the grid or on how many worker processes run the replications.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .datagen import experiment_spec, sample_mixture
from .edgecount import permutation_pvalue
from .errors import EmptySelection, Hetero2STError
from .geometry import build_lmst, pairwise_distances
from .hetero import BootstrapConfig, heterogeneous_tests

__all__ = [
    "TESTS",
    "CSV_FIELDS",
    "ExperimentPlan",
    "RejectionRow",
    "RejectionTable",
    "run_experiment",
    "summarize",
    "default_jobs",
]

TESTS = ("ec", "gec", "wec", "bgec", "bwec")
CSV_FIELDS = ("test", "scenario", "n", "m", "d", "alpha", "rate", "se", "reps", "failed_reps",
              "mean_ms")
THREADS_ENV = "HETERO2ST_THREADS"


def default_jobs() -> int:
    """Worker count: ``$HETERO2ST_THREADS`` if set, else 1."""
    value = os.environ.get(THREADS_ENV)
    return max(1, int(value)) if value else 1


@dataclass
class ExperimentPlan:
    experiment: str
    reps: int = 100
    alpha: float = 0.05
    grid: list | None = None
    tests: tuple = ("bwec",)
    ell: int = 5
    b_rounds: int = 200
    seed: int = 0
    perm_draws: int = 1000
    kmax: int = 10
    ps_threshold: float = 0.8
    weight_mode: str = "corner"
    n_jobs: int | None = None
    timing: bool = True

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        self.tests = tuple(t.lower() for t in self.tests)
        bad = [t for t in self.tests if t not in TESTS]
        if bad or not self.tests:
            raise ValueError(f"tests must be a non-empty subset of {TESTS}, got {bad or self.tests}")
        if self.grid is None:
            self.grid = list(experiment_spec(self.experiment).grid)
        self.grid = [tuple(int(v) for v in cell) for cell in self.grid]
        if not self.grid:
            raise ValueError("grid must contain at least one (n, m, d) cell")

    def bootstrap_config(self, seed: int) -> BootstrapConfig:
        return BootstrapConfig(b_rounds=self.b_rounds, alpha=self.alpha, ell=self.ell,
                               weight_mode=self.weight_mode, kmax=self.kmax,
                               ps_threshold=self.ps_threshold, seed=seed)


@dataclass
class RejectionRow:
    test: str
    scenario: str
    n: int
    m: int
    d: int
    alpha: float
    rejections: int
    reps: int
    failed_reps: int
    mean_ms: float | None

    @property
    def rate(self) -> float:
        return self.rejections / self.reps if self.reps else math.nan

    @property
    def se(self) -> float:
        r = self.rate
        return math.sqrt(r * (1 - r) / self.reps) if self.reps else math.nan

    def csv_values(self) -> list[str]:
        ms = "" if self.mean_ms is None else f"{self.mean_ms:.1f}"
        return [self.test, self.scenario, str(self.n), str(self.m), str(self.d), f"{self.alpha:g}",
                f"{self.rate:.4f}", f"{self.se:.4f}", str(self.reps), str(self.failed_reps), ms]


@dataclass
class RejectionTable:
    rows: list = field(default_factory=list)
    # per replication, per test: True/False decision or the error message
    outcomes: dict = field(default_factory=dict, repr=False)

    def get(self, test: str, n: int | None = None, m: int | None = None,
            d: int | None = None) -> RejectionRow:
        hits = self.select(tests=[test], n=n, m=m, d=d)
        if len(hits) != 1:
            raise EmptySelection(f"expected one row for {test} (n={n}, m={m}, d={d}), got {len(hits)}")
        return hits[0]

    def select(self, tests=None, n=None, m=None, d=None) -> list[RejectionRow]:
        return [r for r in self.rows
                if (tests is None or r.test in tests) and (n is None or r.n == n)
                and (m is None or r.m == m) and (d is None or r.d == d)]


def _rep_seeds(plan: ExperimentPlan, cell, rep):
    root = np.random.SeedSequence(plan.seed, spawn_key=tuple(cell) + (rep,))
    spec_ss, x_ss, y_ss, perm_ss, boot_ss = root.spawn(5)
    return spec_ss, x_ss, y_ss, perm_ss, int(boot_ss.generate_state(1)[0])


def _replicate(plan: ExperimentPlan, cell, rep):
    n, m, d = cell
    spec_ss, x_ss, y_ss, perm_ss, boot_seed = _rep_seeds(plan, cell, rep)
    structure_seed = plan.seed
    exp = experiment_spec(plan.experiment, d=d, n=n, m=m, seed=structure_seed)
    if exp.per_replication:
        exp = experiment_spec(plan.experiment, d=d, n=n, m=m,
                              seed=int(spec_ss.generate_state(1)[0]))
    x = sample_mixture(exp.fx, n, x_ss)
    y = sample_mixture(exp.fy, m, y_ss)

    out = {}
    t0 = time.perf_counter()
    graph = build_lmst(pairwise_distances(x, y), plan.ell).with_sizes(n, m)
    graph_ms = 1000 * (time.perf_counter() - t0)
    perm_seeds = perm_ss.spawn(3)
    for i, test in enumerate(("ec", "gec", "wec")):
        if test not in plan.tests:
            continue
        t0 = time.perf_counter()
        try:
            p = permutation_pvalue(test, graph, n, m, plan.perm_draws, perm_seeds[i])
            out[test] = (p <= plan.alpha, graph_ms + 1000 * (time.perf_counter() - t0))
        except Hetero2STError as exc:
            out[test] = (f"{type(exc).__name__}: {exc}", None)
    boot = [t for t in ("bgec", "bwec") if t in plan.tests]
    if boot:
        t0 = time.perf_counter()
        try:
            reports = heterogeneous_tests(x, y, [t[1:] for t in boot], plan.bootstrap_config(boot_seed),
                                          observed_graph=graph)
            ms = graph_ms + 1000 * (time.perf_counter() - t0)
            for t, rep_ in zip(boot, reports):
                out[t] = (rep_.reject, ms)
        except Hetero2STError as exc:
            for t in boot:
                out[t] = (f"{type(exc).__name__}: {exc}", None)
    return out


def run_experiment(plan: ExperimentPlan) -> RejectionTable:
    """Rejection rates of each requested test over ``plan.reps`` fresh samples.

    A replication in which a test errors out (for example too many infeasible
    bootstrap rounds) is excluded from that test's rate and counted in
    ``failed_reps``.
    """
    jobs = [(cell, r) for cell in plan.grid for r in range(plan.reps)]
    n_jobs = plan.n_jobs or default_jobs()
    if n_jobs == 1:
        results = [_replicate(plan, cell, r) for cell, r in jobs]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(_replicate)(plan, cell, r) for cell, r in jobs)

    table = RejectionTable()
    for cell in plan.grid:
        per_cell = [res for (c, _), res in zip(jobs, results) if c == cell]
        for test in [t for t in TESTS if t in plan.tests]:
            decisions = [res[test] for res in per_cell]
            ok = [dec for dec in decisions if isinstance(dec[0], bool)]
            times = [ms for _, ms in ok]
            mean_ms = float(np.mean(times)) if (plan.timing and times) else None
            table.rows.append(RejectionRow(
                test, plan.experiment, *cell, plan.alpha,
                rejections=sum(dec for dec, _ in ok), reps=len(ok),
                failed_reps=len(decisions) - len(ok), mean_ms=mean_ms,
            ))
        for r, res in enumerate(per_cell):
            table.outcomes[tuple(cell) + (r,)] = {t: v[0] for t, v in res.items()}
    return table


def summarize(table: RejectionTable, format: str = "csv", tests=None, n=None, m=None,
              d=None) -> str:
    """Render selected rows as CSV or as an aligned text table.

    The text layout has one row per test and one column per (n, m, d) cell.
    """
    rows = table.select(tests=tests, n=n, m=m, d=d)
    if not rows:
        raise EmptySelection("no rows match the selection")
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in rows:
            w.writerow(r.csv_values())
        return buf.getvalue()
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    cells = list(dict.fromkeys((r.n, r.m, r.d) for r in rows))
    names = list(dict.fromkeys(r.test for r in rows))
    head = ["test"] + [f"n={a},m={b},d={c}" for a, b, c in cells]
    body = []
    for t in names:
        line = [t.upper()]
        for cell in cells:
            hit = [r for r in rows if r.test == t and (r.n, r.m, r.d) == cell]
            line.append(f"{hit[0].rate:.3f}" if hit and hit[0].reps else "-")
        body.append(line)
    widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
    fmt = lambda row: "  ".join(v.ljust(wd) if i == 0 else v.rjust(wd)
                                for i, (v, wd) in enumerate(zip(row, widths)))
    scen = ", ".join(dict.fromkeys(r.scenario for r in rows))
    lines = [f"Rejection rates ({scen}, alpha={rows[0].alpha:g})", fmt(head)]
    lines.append("-" * len(lines[-1]))
    lines.extend(fmt(row) for row in body)
    return "\n".join(lines) + "\n"
