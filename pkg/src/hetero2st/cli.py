"""Command-line entry point (``hetero2st``).

Subcommands::

    hetero2st test X.csv Y.csv [--tests bwec,bgec] [--out report.json]
    hetero2st experiment exp1-s1 --reps 10 --tests bwec [--out table.csv]
    hetero2st experiment --list
    hetero2st generate fig2-case2 --nx 2000 --ny 200 --seed 7 --out-prefix data/fig2
    hetero2st spec exp1-s1 --d 5 --out exp1.json

``test`` exits with 0 when every requested test retains, 3 when any rejects
and 1 on errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import datagen
from .edgecount import permutation_pvalue
from .errors import DimensionMismatch, Hetero2STError, InvalidSpec, TooFewPoints
from .geometry import build_lmst, pairwise_distances
from .harness import TESTS, ExperimentPlan, default_jobs, run_experiment, summarize
from .hetero import BootstrapConfig, TestReport, heterogeneous_tests

EXIT_RETAIN, EXIT_ERROR, EXIT_REJECT = 0, 1, 3

# Column header of the player-behaviour data the method was built for; any
# header (or none) is accepted, this is the documented example layout.
GAME_FEATURES = (
    "game_level", "pve_quests", "pve_mission", "pve_time", "num_game", "purch_count",
    "frnd_count", "frnd_level", "numfrnd_purch", "valfrnd_purch", "numfrnd_played",
    "numfrnd_games", "tenure", "guild_tenure", "numguild_played", "numguild_games",
)


class CsvError(Hetero2STError, ValueError):
    pass


# --------------------------------------------------------------------------
# CSV input/output

def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_matrix(path) -> tuple[np.ndarray, list | None]:
    """Parse a numeric CSV. A first row that is not all numbers is a header."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise CsvError(f"{path}: cannot read ({exc.strerror})") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvError(f"{path}: no data rows")
    header = None
    first = 1
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first = 2
    if not rows:
        raise CsvError(f"{path}: header but no data rows")
    width = len(header) if header else len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line = i + first
        if len(row) != width:
            raise CsvError(f"{path}: row {line} has {len(row)} fields, expected {width}")
        for j, tok in enumerate(row):
            try:
                out[i, j] = float(tok)
            except ValueError:
                raise CsvError(f"{path}: row {line}, column {j + 1}: cannot parse {tok!r} as a number") from None
    return out, header


def write_matrix(path, data: np.ndarray, header=None) -> None:
    """Write a matrix with shortest round-trip float formatting (byte-stable)."""
    data = np.asarray(data, dtype=float)
    if header is None:
        header = [f"x{j + 1}" for j in range(data.shape[1])]
    lines = [",".join(header)]
    lines.extend(",".join(repr(float(v)) for v in row) for row in data)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# test

_HINTS = {
    "TooManyInfeasibleRounds": "m is too large relative to the smallest estimated cluster; "
                               "try --weights dirichlet, a smaller --kmax or a larger baseline",
    "InsufficientDraws": "m is too large relative to the clusters of the baseline sample",
    "TooFewPoints": "the baseline needs at least 2*kmax rows; lower --kmax",
    "GraphTooSmall": "the pooled sample must have more than ell points; lower --ell",
    "DimensionMismatch": "both files must have the same number of columns",
    "SingleSample": "both samples need at least one row",
    "SingularCovariance": "GEC is undefined here; use wec/bwec",
    "DisconnectedAfterExclusion": "too few or too tied points for ell spanning trees; lower --ell",
}


def _permutation_report(kind, graph, n, m, args) -> TestReport:
    from .edgecount import count_edges, gec_statistic, permutation_moments, wec_statistic

    counts = count_edges(graph)
    if kind == "ec":
        obs = float(counts.r0)
    elif kind == "wec":
        obs = wec_statistic(counts, n, m)
    else:
        obs = gec_statistic(counts, permutation_moments(graph, n, m))
    p = permutation_pvalue(kind, graph, n, m, args.perm_draws, np.random.SeedSequence(args.seed))
    return TestReport(statistic=kind, observed=float(obs), cutoff=float("inf"), p_value=p,
                      reject=bool(p <= args.alpha), k_hat=0, feasible_rounds=0, attempts=0, n=n,
                      m=m, alpha=args.alpha, b_rounds=args.perm_draws, ell=args.ell,
                      weight_mode="permutation", seed=args.seed, wall_time_s=0.0)


def _format_reports(reports, fmt: str) -> str:
    dicts = [r.to_dict() for r in reports]
    if fmt == "json":
        return json.dumps(dicts, indent=2) + "\n"
    keys = list(dicts[0])
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, keys, lineterminator="\n")
        w.writeheader()
        w.writerows(dicts)
        return buf.getvalue()
    lines = []
    for r in reports:
        cut = "inf" if not np.isfinite(r.cutoff) else f"{r.cutoff:.5g}"
        lines.append(f"{r.statistic.upper():5s} observed={r.observed:.5g} cutoff={cut} "
                     f"p={r.p_value:.4g} -> {r.decision} (k_hat={r.k_hat}, n={r.n}, m={r.m})")
    return "\n".join(lines) + "\n"


def cmd_test(args) -> int:
    x, _ = read_matrix(args.x_csv)
    y, _ = read_matrix(args.y_csv)
    if args.arcsinh:
        x, y = np.arcsinh(x), np.arcsinh(y)
    kinds = _parse_tests(args.tests or "bwec")
    n, m = len(x), len(y)
    if n < 2:
        raise TooFewPoints(f"{args.x_csv}: the baseline sample x needs at least 2 rows, got {n}")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"x has {x.shape[1]} columns but y has {y.shape[1]}")
    reports = []
    graph = build_lmst(pairwise_distances(x, y), args.ell).with_sizes(n, m)
    for kind in [k for k in kinds if not k.startswith("b")]:
        reports.append(_permutation_report(kind, graph, n, m, args))
    boot = [k[1:] for k in kinds if k.startswith("b")]
    if boot:
        cfg = BootstrapConfig(b_rounds=args.B, alpha=args.alpha, ell=args.ell,
                              weight_mode=args.weights, kmax=args.kmax,
                              ps_threshold=args.ps_threshold, seed=args.seed)
        reports.extend(heterogeneous_tests(x, y, boot, cfg, observed_graph=graph))
    order = {k: i for i, k in enumerate(kinds)}
    reports.sort(key=lambda r: order[r.statistic])
    _emit(_format_reports(reports, args.format), args.out)
    return EXIT_REJECT if any(r.reject for r in reports) else EXIT_RETAIN


# --------------------------------------------------------------------------
# experiment

def _parse_tests(value) -> list[str]:
    kinds = [t.strip().lower() for t in str(value).split(",") if t.strip()]
    bad = [k for k in kinds if k not in TESTS]
    if bad or not kinds:
        raise InvalidSpec(f"--tests must be a comma list drawn from {','.join(TESTS)}; got {value!r}")
    return list(dict.fromkeys(kinds))


def _plan_from_args(args) -> ExperimentPlan:
    base = {}
    if args.plan:
        try:
            base = json.loads(Path(args.plan).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"{args.plan}: cannot read plan ({exc})") from exc
        known = {f.name for f in fields(ExperimentPlan)}
        extra = set(base) - known
        if extra:
            raise InvalidSpec(f"{args.plan}: unknown plan keys {sorted(extra)}")
    if args.name:
        base["experiment"] = args.name
    if "experiment" not in base:
        raise InvalidSpec("give an experiment name or --plan FILE (see --list)")
    exp = datagen.experiment_spec(base["experiment"])
    grid = [tuple(c) for c in base.get("grid") or exp.grid]
    want = {"n": args.n, "m": args.m, "d": args.d}
    if any(v is not None for v in want.values()):
        picked = [c for c in grid
                  if all(v is None or c[i] == v for i, v in enumerate(want.values()))]
        if not picked:
            n0, m0, d0 = grid[0]
            picked = [(args.n or n0, args.m or m0, args.d or d0)]
        grid = picked
    base["grid"] = grid
    overrides = dict(reps=args.reps, alpha=args.alpha, ell=args.ell, b_rounds=args.B,
                     kmax=args.kmax, ps_threshold=args.ps_threshold, weight_mode=args.weights,
                     seed=args.seed, n_jobs=args.jobs)
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    if args.tests:
        base["tests"] = tuple(_parse_tests(args.tests))
    if args.no_timing:
        base["timing"] = False
    cap = default_jobs() if os.environ.get("HETERO2ST_THREADS") else None
    if cap is not None:
        base["n_jobs"] = min(base.get("n_jobs") or cap, cap)
    try:
        return ExperimentPlan(**base)
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"invalid plan: {exc}") from exc


def cmd_experiment(args) -> int:
    if args.list:
        for name in datagen.EXPERIMENTS:
            exp = datagen.experiment_spec(name)
            cells = " ".join(f"({n},{m},{d})" for n, m, d in exp.grid)
            print(f"{name:12s} {cells}")
        return EXIT_RETAIN
    plan = _plan_from_args(args)
    table = run_experiment(plan)
    csv_text = summarize(table, "csv")
    if args.out:
        Path(args.out).write_text(csv_text)
        print(summarize(table, "text"), end="")
    elif args.format == "csv":
        print(csv_text, end="")
    elif args.format == "json":
        rows = list(csv.DictReader(io.StringIO(csv_text)))
        print(json.dumps(rows, indent=2))
    else:
        print(summarize(table, "text"), end="")
    return EXIT_RETAIN


# --------------------------------------------------------------------------
# generate / spec

def _load_source(source: str, d, seed):
    if Path(source).is_file():
        fx, fy, extra = datagen.load_specs(source)
        return fx, fy, extra.get("n"), extra.get("m")
    exp = datagen.experiment_spec(source, d=d, seed=seed)
    return exp.fx, exp.fy, exp.n, exp.m


def cmd_generate(args) -> int:
    fx, fy, n, m = _load_source(args.source, args.d, args.spec_seed)
    nx = args.nx if args.nx is not None else n
    ny = args.ny if args.ny is not None else m
    if nx is None or ny is None:
        raise InvalidSpec("sample sizes unknown: pass --nx and --ny")
    if nx < 1 or ny < 1:
        raise InvalidSpec(f"--nx and --ny must be >= 1 (got {nx}, {ny})")
    sx, sy = np.random.SeedSequence(args.seed).spawn(2)
    prefix = args.out_prefix
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    write_matrix(f"{prefix}_x.csv", datagen.sample_mixture(fx, nx, sx))
    write_matrix(f"{prefix}_y.csv", datagen.sample_mixture(fy, ny, sy))
    print(f"wrote {prefix}_x.csv ({nx} rows) and {prefix}_y.csv ({ny} rows), d={fx.d}")
    return EXIT_RETAIN


def cmd_spec(args) -> int:
    exp = datagen.experiment_spec(args.name, d=args.d, seed=args.spec_seed)
    doc = {"x": datagen.spec_to_dict(exp.fx), "y": datagen.spec_to_dict(exp.fy),
           "n": exp.n, "m": exp.m}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_RETAIN


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# argument parsing

def _add_test_flags(p, defaults: bool):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--alpha", type=float, default=d(0.05), help="significance level")
    p.add_argument("--ell", type=int, default=d(5), help="number of edge-disjoint MSTs")
    p.add_argument("--B", type=int, default=d(200), help="bootstrap rounds")
    p.add_argument("--kmax", type=int, default=d(10), help="largest cluster count tried")
    p.add_argument("--ps-threshold", type=float, default=d(0.8), dest="ps_threshold",
                   help="prediction-strength threshold for choosing K")
    p.add_argument("--weights", choices=("corner", "dirichlet"), default=d("corner"))
    p.add_argument("--tests", help="comma list from ec,gec,wec,bgec,bwec")
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--format", choices=("json", "csv", "text"), default=None)
    p.add_argument("--out", help="output file (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hetero2st",
                                 description="Two-sample tests under latent heterogeneity")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test whether Y is a re-weighting of X's subgroups")
    p.add_argument("x_csv", help="baseline sample (the larger one)")
    p.add_argument("y_csv", help="sample under test")
    _add_test_flags(p, defaults=True)
    p.add_argument("--perm-draws", type=int, default=1000, dest="perm_draws",
                   help="permutations for ec/gec/wec p-values")
    p.add_argument("--arcsinh", action="store_true", help="apply arcsinh to all features first")
    p.set_defaults(func=cmd_test, default_format="json")

    p = sub.add_parser("experiment", help="replicate a simulation setting")
    p.add_argument("name", nargs="?", help="experiment name (see --list)")
    p.add_argument("--plan", help="JSON plan file with ExperimentPlan fields")
    p.add_argument("--list", action="store_true", help="list experiment names")
    p.add_argument("--reps", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--jobs", type=int, help="worker processes (capped by HETERO2ST_THREADS)")
    p.add_argument("--no-timing", action="store_true", dest="no_timing",
                   help="leave mean_ms empty so repeated runs give identical CSVs")
    _add_test_flags(p, defaults=False)
    p.set_defaults(func=cmd_experiment, default_format="text")

    p = sub.add_parser("generate", help="sample X and Y CSVs from a spec file or experiment")
    p.add_argument("source", help="spec JSON file or experiment name")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument("--spec-seed", type=int, default=0, dest="spec_seed",
                   help="seed for random parts of a named experiment's distributions")
    p.add_argument("--out-prefix", default="sample", dest="out_prefix")
    p.set_defaults(func=cmd_generate, default_format=None)

    p = sub.add_parser("spec", help="export a named experiment's distributions as JSON")
    p.add_argument("name")
    p.add_argument("--d", type=int)
    p.add_argument("--spec-seed", type=int, default=0, dest="spec_seed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spec, default_format=None)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "format", None) is None and args.default_format:
        args.format = args.default_format
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore" if args.command != "test" else "default")
            return args.func(args)
    except Hetero2STError as exc:
        name = type(exc).__name__
        hint = _HINTS.get(name)
        print(f"error: {name}: {exc}" + (f"\nhint: {hint}" if hint else ""), file=sys.stderr)
        return EXIT_ERROR
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
