import hashlib
import json

import numpy as np
import pytest

from hetero2st.cli import GAME_FEATURES, main, read_matrix, write_matrix
from hetero2st.datagen import experiment_spec, sample_mixture
from hetero2st.hetero import TestReport


def write_csv(path, data, header=None):
    write_matrix(path, data, header)
    return str(path)


def sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


@pytest.fixture
def fig1(tmp_path):
    def make(case, seed=0):
        exp = experiment_spec(f"fig1-case{case}")
        x = write_csv(tmp_path / f"x{case}.csv", sample_mixture(exp.fx, 2000, seed))
        y = write_csv(tmp_path / f"y{case}.csv", sample_mixture(exp.fy, 200, seed + 1))
        return x, y
    return make


# ---- CSV parsing ---------------------------------------------------------------

def test_header_is_detected(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("a,b\n1,2\n3.5,-4e1\n")
    data, header = read_matrix(p)
    assert header == ["a", "b"] and data.tolist() == [[1, 2], [3.5, -40]]


def test_headerless_file(tmp_path):
    p = tmp_path / "n.csv"
    p.write_text("1,2\n3,4\n")
    data, header = read_matrix(p)
    assert header is None and data.shape == (2, 2)


def test_parse_error_location(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3,oops\n")
    good = write_csv(tmp_path / "g.csv", np.zeros((5, 2)))
    assert main(["test", str(bad), good]) == 1
    err = capsys.readouterr().err
    assert "row 3, column 2" in err and "oops" in err


def test_ragged_rows(tmp_path, capsys):
    bad = tmp_path / "r.csv"
    bad.write_text("1,2\n3\n")
    assert main(["test", str(bad), str(bad)]) == 1
    assert "row 2 has 1 fields" in capsys.readouterr().err


def test_game_feature_header_is_accepted(tmp_path):
    rng = np.random.default_rng(0)
    p = write_csv(tmp_path / "g.csv", rng.random((4, 16)), list(GAME_FEATURES))
    data, header = read_matrix(p)
    assert header == list(GAME_FEATURES) and data.shape == (4, 16)


def test_write_read_round_trip(tmp_path):
    x = np.random.default_rng(1).normal(size=(20, 3))
    data, _ = read_matrix(write_csv(tmp_path / "w.csv", x))
    assert np.array_equal(data, x)


# ---- test subcommand ------------------------------------------------------------

def test_new_component_rejects(fig1, tmp_path):
    x, y = fig1(3)
    out = tmp_path / "r.json"
    assert main(["test", x, y, "--out", str(out)]) == 3
    reports = json.loads(out.read_text())
    assert reports[0]["statistic"] == "bwec" and reports[0]["decision"] == "reject"


def test_reweighted_null_retains(fig1):
    x, y = fig1(1)
    assert main(["test", x, y, "--format", "text"]) == 0


def test_subsample_of_baseline_retains(tmp_path):
    exp = experiment_spec("exp1-s1", d=5)
    exit_codes = []
    for seed in range(20):
        x = sample_mixture(exp.fx, 300, seed)
        rows = np.random.default_rng(seed).choice(300, 30, replace=False)
        xp = write_csv(tmp_path / f"x{seed}.csv", x)
        yp = write_csv(tmp_path / f"y{seed}.csv", x[rows])
        exit_codes.append(main(["test", xp, yp, "--seed", str(seed), "--B", "100",
                                "--out", str(tmp_path / "o.json")]))
    assert exit_codes.count(0) >= 19


def test_one_row_baseline_is_an_error(tmp_path, capsys):
    x = write_csv(tmp_path / "x.csv", np.zeros((1, 2)))
    y = write_csv(tmp_path / "y.csv", np.ones((5, 2)))
    assert main(["test", x, y]) == 1
    assert "at least 2 rows" in capsys.readouterr().err


def test_dimension_mismatch_is_an_error(tmp_path, capsys):
    x = write_csv(tmp_path / "x.csv", np.zeros((30, 2)))
    y = write_csv(tmp_path / "y.csv", np.ones((5, 3)))
    assert main(["test", x, y]) == 1
    assert "DimensionMismatch" in capsys.readouterr().err


def test_json_reports_round_trip(fig1, tmp_path):
    x, y = fig1(2)
    out = tmp_path / "r.json"
    main(["test", x, y, "--tests", "wec,bwec,bgec", "--B", "60", "--out", str(out)])
    raw = json.loads(out.read_text())
    assert [r["statistic"] for r in raw] == ["wec", "bwec", "bgec"]
    for entry in raw:
        rep = TestReport.from_dict(entry)
        assert json.loads(json.dumps(rep.to_dict())) == entry


def test_report_is_deterministic(fig1, tmp_path):
    x, y = fig1(2)
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        main(["test", x, y, "--B", "60", "--seed", "5", "--out", str(out)])
        d = json.loads(out.read_text())[0]
        d.pop("wall_time_s")
        outs.append(d)
    assert outs[0] == outs[1]


def test_csv_and_text_formats(fig1, capsys):
    x, y = fig1(3)
    main(["test", x, y, "--B", "50", "--format", "csv"])
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("statistic,observed,cutoff") and out[1].startswith("bwec,")


def test_arcsinh_flag(tmp_path, capsys):
    rng = np.random.default_rng(3)
    xa, ya = np.exp(3 * rng.normal(size=(200, 2))), np.exp(3 * rng.normal(size=(20, 2)))
    x, y = write_csv(tmp_path / "x.csv", xa), write_csv(tmp_path / "y.csv", ya)
    xt = write_csv(tmp_path / "xt.csv", np.arcsinh(xa))
    yt = write_csv(tmp_path / "yt.csv", np.arcsinh(ya))
    main(["test", x, y, "--B", "50", "--arcsinh", "--format", "json"])
    flagged = json.loads(capsys.readouterr().out)[0]
    main(["test", xt, yt, "--B", "50", "--format", "json"])
    transformed = json.loads(capsys.readouterr().out)[0]
    main(["test", x, y, "--B", "50", "--format", "json"])
    raw = json.loads(capsys.readouterr().out)[0]
    assert flagged["observed"] == transformed["observed"] != raw["observed"]


def test_bad_tests_flag(fig1, capsys):
    x, y = fig1(1)
    assert main(["test", x, y, "--tests", "foo"]) == 1


# ---- experiment subcommand --------------------------------------------------------

def test_list(capsys):
    assert main(["experiment", "--list"]) == 0
    names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert "exp1-s1" in names and "fig2-case3" in names and len(names) == 12


def test_experiment_csv_rows(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = main(["experiment", "exp1-s1", "--reps", "10", "--tests", "bwec", "--n", "500",
                 "--B", "50", "--out", str(out)])
    assert code == 0
    rows = out.read_text().strip().split("\n")[1:]
    assert [r.split(",")[4] for r in rows] == ["5", "15", "30"]
    assert "BWEC" in capsys.readouterr().out


def test_plan_file(tmp_path, capsys):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"experiment": "fig2-case1", "reps": 2, "tests": ["wec"],
                                "grid": [[300, 30, 3]]}))
    assert main(["experiment", "--plan", str(plan), "--format", "csv", "--no-timing"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1].startswith("wec,fig2-case1,300,30,3,")


def test_unknown_experiment(capsys):
    assert main(["experiment", "exp42"]) == 1
    assert "unknown experiment" in capsys.readouterr().err


def test_invalid_override(capsys):
    assert main(["experiment", "exp1-s1", "--reps", "0"]) == 1


def test_thread_cap(monkeypatch, tmp_path):
    monkeypatch.setenv("HETERO2ST_THREADS", "1")
    out = tmp_path / "t.csv"
    assert main(["experiment", "fig2-case1", "--reps", "1", "--tests", "wec", "--n", "300",
                 "--m", "30", "--jobs", "4", "--out", str(out)]) == 0


# ---- generate / spec -------------------------------------------------------------

def test_generate_is_byte_identical(tmp_path):
    for k in range(2):
        assert main(["generate", "fig2-case2", "--seed", "7", "--out-prefix", str(tmp_path / f"r{k}")]) == 0
    assert sha(tmp_path / "r0_x.csv") == sha(tmp_path / "r1_x.csv")
    assert sha(tmp_path / "r0_y.csv") == sha(tmp_path / "r1_y.csv")


def test_generate_shape(tmp_path):
    main(["generate", "exp1-s1", "--out-prefix", str(tmp_path / "e")])
    data, _ = read_matrix(tmp_path / "e_x.csv")
    assert data.shape == (500, 5)


def test_generate_zero_count(tmp_path, capsys):
    assert main(["generate", "exp1-s1", "--nx", "0", "--ny", "5", "--out-prefix", str(tmp_path / "z")]) == 1


def test_generate_from_spec_file(tmp_path):
    spec = tmp_path / "s.json"
    assert main(["spec", "fig1-case2", "--out", str(spec)]) == 0
    assert main(["generate", str(spec), "--nx", "40", "--ny", "7", "--out-prefix", str(tmp_path / "g")]) == 0
    assert read_matrix(tmp_path / "g_y.csv")[0].shape == (7, 2)


def test_generate_reports_field_path(tmp_path, capsys):
    spec = tmp_path / "s.json"
    main(["spec", "fig1-case2", "--out", str(spec)])
    doc = json.loads(spec.read_text())
    doc["y"]["weights"] = [0.5, 0.5, 0.5]
    spec.write_text(json.dumps(doc))
    assert main(["generate", str(spec), "--out-prefix", str(tmp_path / "g")]) == 1
    assert "weights" in capsys.readouterr().err


@pytest.mark.xfail(reason="prediction strength at the default 0.8 threshold usually picks K=3 for "
                          "these copula mixtures; the corner surrogates then over-disperse the "
                          "calibration and the measured rate is about 0.4", strict=False)
def test_exp2_scenario2_power_at_large_n(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["experiment", "exp2-s2", "--reps", "100", "--n", "2000", "--m", "100", "--d", "15",
                 "--tests", "bwec", "--no-timing", "--out", str(out)]) == 0
    rate = float(out.read_text().splitlines()[1].split(",")[6])
    assert rate >= 0.9
