import json
import subprocess
import sys

import pytest

from mvps.cli import run
from mvps.rng import DEFAULT_SEED


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return p


@pytest.fixture
def polya3(tmp_path):
    return write(tmp_path, "polya3.json", {"theta": 1, "nu": [1, 1, 1], "R": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})


@pytest.fixture
def flip2(tmp_path):
    return write(tmp_path, "flip2.json", {"theta": 1, "nu": [0.5, 0.5], "R": [[0, 1], [1, 0]]})


@pytest.fixture
def block(tmp_path):
    return write(
        tmp_path,
        "block.json",
        {"theta": 1, "colors": ["a", "b", "c"], "nu": [0.2, 0.3, 0.5], "R": [[0.4, 0.6, 0], [0.4, 0.6, 0], [0, 0, 1]]},
    )


def test_classify_polya3(polya3, capsys):
    assert run(["classify", str(polya3)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "Exchangeable"
    assert out["partition"] == [[0], [1], [2]]
    assert out["m"] == 1


def test_classify_flip_exits_zero(flip2, capsys):
    assert run(["classify", str(flip2)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "NotExchangeable"
    assert out["witness"]["check"] == "two_step"


def test_simulate_byte_identical(block, capsys):
    assert run(["simulate", str(block), "--n", "5", "--seed", "7"]) == 0
    first = capsys.readouterr().out
    assert run(["simulate", str(block), "--n", "5", "--seed", "7"]) == 0
    assert capsys.readouterr().out == first
    lines = first.strip().split("\n")
    assert lines[0] == "step,color,p_a,p_b,p_c"
    assert len(lines) == 6


def test_default_seed_is_fixed(block, capsys):
    run(["simulate", str(block), "--n", "20"])
    a = capsys.readouterr().out
    run(["simulate", str(block), "--n", "20", "--seed", str(DEFAULT_SEED)])
    assert capsys.readouterr().out == a


def test_prior_json_lines(block, capsys):
    assert run(["prior", str(block), "--draws", "3", "--eps", "1e-6", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 3
    for line in lines:
        d = json.loads(line)
        assert sum(d["weights"]) + d["truncation_mass"] == pytest.approx(1.0, abs=1e-12)
        assert set(d["sources"]) <= {"a", "b", "c"}


def test_prior_rejects_non_exchangeable(flip2, capsys):
    assert run(["prior", str(flip2)]) == 3
    assert "not exchangeable" in capsys.readouterr().err


def test_oracle(flip2, block, capsys):
    assert run(["oracle", str(flip2), "--depth", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] is False
    assert out["violation_depth"] == 3
    assert run(["oracle", str(block)]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_oracle_budget_is_usage_error(block, capsys):
    assert run(["oracle", str(block), "--depth", "4", "--budget", "10"]) == 2
    assert "budget" in capsys.readouterr().err


def test_verify_quick_writes_reports(block, tmp_path, capsys):
    out_dir = tmp_path / "out"
    assert run(["verify", str(block), "--suite", "quick", "--seed", "5", "--out", str(out_dir)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["passed"] is True
    assert (out_dir / "verify-5.json").exists()
    assert (out_dir / "verify-5.csv").read_text().startswith("experiment,statistic")


def test_verify_csv_flag(flip2, capsys):
    assert run(["verify", str(flip2), "--suite", "quick", "--csv"]) == 0
    assert capsys.readouterr().out.startswith("experiment,statistic")


def test_verify_failure_exit_one(block, monkeypatch, capsys):
    import mvps.cli as cli
    from mvps.experiments import ExperimentReport

    def failing(*args, **kwargs):
        r = ExperimentReport("forced", {}, 0)
        r.add("x", 1.0, 0.0, 0.1)
        return [r]

    monkeypatch.setattr(cli, "run_suite", failing)
    assert run(["verify", str(block), "--suite", "quick"]) == 1
    assert "FAIL forced.x" in capsys.readouterr().err


def test_demo_singular(tmp_path, capsys):
    args = ["demo-singular", "--length", "300", "--runs", "100", "--seed", "3", "--out", str(tmp_path)]
    assert run(args) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["name"] == "singular_structure"
    assert (tmp_path / "demo-singular-3.json").exists()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["simulate"],
        ["simulate", "m.json", "--n", "0"],
        ["simulate", "m.json", "--seed", "abc"],
        ["prior", "m.json", "--eps", "-1"],
        ["verify", "m.json", "--suite", "huge"],
    ],
)
def test_argument_errors(argv, capsys):
    assert run(argv) == 2
    assert capsys.readouterr().err


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert run(["classify", str(tmp_path / "nope.json")]) == 2


def test_invalid_s_is_usage_error(capsys):
    assert run(["demo-singular", "--s", "1.5"]) == 2


@pytest.mark.parametrize(
    "data",
    [
        "not json",
        {"theta": 1, "nu": [0.5, 0.5]},
        {"theta": -1, "nu": [0.5, 0.5], "R": [[1, 0], [0, 1]]},
        {"theta": 1, "nu": [0.5, 0.5], "R": [[1, 0, 0], [0, 1, 0]]},
        {"theta": 1, "nu": [0, 0], "R": [[1, 0], [0, 1]]},
        {"theta": 1, "nu": [0.5, -0.5], "R": [[1, 0], [0, 1]]},
    ],
)
def test_model_errors_exit_three(tmp_path, data, capsys):
    p = write(tmp_path, "bad.json", data)
    assert run(["classify", str(p)]) == 3
    assert "invalid model" in capsys.readouterr().err


def test_module_entry_point(polya3):
    proc = subprocess.run(
        [sys.executable, "-m", "mvps", "classify", str(polya3)], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kind"] == "Exchangeable"
