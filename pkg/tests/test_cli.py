import json
import math

import pytest

from ordinalpower.cli import main
from ordinalpower.matrix_core import MarginalPair, ProbMatrix, marginals
from ordinalpower.power_study import CSV_FIELDS, results_from_csv
from strategies import P1


def write_marginals(path, mp):
    path.write_text(json.dumps(mp.to_json()))
    return path


@pytest.fixture
def case1_file(tmp_path, case1):
    return write_marginals(tmp_path / "case1.json", case1)


def test_construct_case1(tmp_path, case1_file):
    out = tmp_path / "m.json"
    code = main(["construct", "--marginals", str(case1_file), "--lambda", "0", "--n", "120", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    top = doc["maximizer"]
    assert top["den"] == 10 and top["entries"] == [[3, 0], [3, 4]]
    assert (top["kappa_num"], top["kappa_den"]) == (4, 9)
    assert doc["kappa_upper_bound"] == {"num": 4, "den": 9}
    assert doc["independent"]["kappa_num"] == 0
    assert doc["calibrated"]["n"] == 120 and doc["calibrated"]["entries"] == [[36, 0], [36, 48]]
    assert doc["tau_hd"] == pytest.approx(0.216, abs=5e-4)


def test_construct_dominance_violation(tmp_path, caplog):
    path = write_marginals(tmp_path / "p1.json", marginals(ProbMatrix(P1)))
    assert main(["construct", "--marginals", str(path), "--lambda", "0", "--n", "6"]) == 2
    assert "j=1" in caplog.text


def test_construct_equal_marginals(tmp_path, capsys):
    mp = MarginalPair.from_counts((1, 2, 3), (1, 2, 3), 6)
    path = write_marginals(tmp_path / "eq.json", mp)
    assert main(["construct", "--marginals", str(path), "--lambda", "0", "--n", "6"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["maximizer"]["entries"] == [[1, 0, 0], [0, 2, 0], [0, 0, 3]]
    assert (doc["maximizer"]["kappa_num"], doc["maximizer"]["kappa_den"]) == (1, 1)
    assert doc["tau_hd"] == 0


def test_construct_infeasible_lambda(tmp_path):
    path = write_marginals(tmp_path / "bad.json", MarginalPair.from_counts((0, 1, 5), (1, 0, 5), 6))
    assert main(["construct", "--marginals", str(path), "--lambda", "1/2", "--n", "6"]) == 3
    assert main(["construct", "--marginals", str(path), "--lambda", "0", "--n", "6"]) == 0


@pytest.mark.parametrize("argv", [
    ["--lambda", "3/2", "--n", "120"],
    ["--lambda", "x", "--n", "120"],
    ["--lambda", "0", "--n", "7"],
    ["--lambda", "0"],
])
def test_construct_input_errors(case1_file, argv):
    assert main(["construct", "--marginals", str(case1_file)] + argv) == 2


def test_construct_missing_file(tmp_path):
    assert main(["construct", "--marginals", str(tmp_path / "nope.json"), "--lambda", "0", "--n", "10"]) == 2


def test_feasible_lambda(case1_file, capsys):
    assert main(["feasible-lambda", "--marginals", str(case1_file), "--n", "120", "--grid", "0,1/4,1/2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [(f["lambda_num"], f["lambda_den"]) for f in doc["feasible"]] == [(0, 1), (1, 4), (1, 2)]
    assert doc["feasible"][2]["entries"] == [[29, 7], [43, 41]]


def test_feasible_lambda_default_grid(case1_file, capsys):
    assert main(["feasible-lambda", "--marginals", str(case1_file), "--n", "120"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["grid_size"] == 101


def test_feasible_lambda_empty_is_exit_3(tmp_path):
    path = write_marginals(tmp_path / "bad.json", MarginalPair.from_counts((0, 1, 5), (1, 0, 5), 6))
    assert main(["feasible-lambda", "--marginals", str(path), "--n", "6", "--grid", "1/2"]) == 3


def test_power_csv_deterministic(tmp_path, case1_file):
    argv = ["power", "--marginals", str(case1_file), "--n", "40", "--reps", "200",
            "--null-draws", "200", "--seed", "11"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    # default lambda grid: five rows
    assert len(lines) == 6


def test_power_skipped_rows_exit_0(tmp_path):
    path = write_marginals(tmp_path / "bad.json", MarginalPair.from_counts((0, 1, 5), (1, 0, 5), 6))
    out = tmp_path / "p.csv"
    code = main(["power", "--marginals", str(path), "--n", "6", "--lambda", "1/2", "--reps", "10",
                 "--null-draws", "10", "--out", str(out)])
    assert code == 0
    assert out.read_text().splitlines()[1].endswith("skipped_infeasible")


def test_config_file_and_flag_precedence(tmp_path, case1_file, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# small study\n"
        f"marginals = {case1_file.name}\n"
        "n = 40, 60\n"
        "lambdas = 0, 1\n"
        "reps = 50   # tiny\n"
        "null_draws = 50\n"
        "seed = 3\n"
    )
    assert main(["power", "--config", str(cfg)]) == 0
    rows = results_from_csv(capsys.readouterr().out)
    assert [(r.n, r.lam, r.replications, r.seed != 0) for r in rows] == [
        (40, 0, 50, True), (40, 1, 50, True), (60, 0, 50, True), (60, 1, 50, True)]
    assert main(["power", "--config", str(cfg), "--n", "20", "--reps", "30"]) == 0
    rows = results_from_csv(capsys.readouterr().out)
    assert [(r.n, r.replications) for r in rows] == [(20, 30), (20, 30)]


@pytest.mark.parametrize("text", ["n = forty\n", "colour = blue\n", "just words\n", "alpha = 2\n"])
def test_bad_config_exit_2(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert main(["power", "--config", str(cfg)]) == 2


def test_sharp_null_config(tmp_path, capsys):
    mp = MarginalPair.from_counts((2, 2, 1), (2, 2, 1), 5)
    write_marginals(tmp_path / "null.json", mp)
    cfg = tmp_path / "null.cfg"
    cfg.write_text("marginals = null.json\nn = 60\nlambda = 0\nreps = 1000\nnull_draws = 400\nseed = 21\n")
    assert main(["power", "--config", str(cfg)]) == 0
    (row,) = results_from_csv(capsys.readouterr().out)
    assert row.kappa == 1 and row.tau_hd == 0
    assert abs(row.power - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / row.replications)


def test_reproduce_paper_needs_out():
    assert main(["reproduce-paper", "--reps", "10"]) == 2
