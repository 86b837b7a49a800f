import csv
import json
import time

import pytest
from click.testing import CliRunner

from zsregret.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def test_solve_figure_game(runner):
    res = runner.invoke(main, ["solve", "--inline", "2/3,0;0,1/3"])
    assert res.exit_code == 0, res.output
    assert "0.222222222222" in res.output
    assert "0.333333333333" in res.output and "0.666666666667" in res.output


def test_solve_native_scale(runner):
    res = runner.invoke(main, ["solve", "--inline", "0,1,-1;-1,0,1;1,-1,0"])
    assert res.exit_code == 0, res.output
    assert "V*" in res.output


def test_solve_from_file(runner, tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("# figure game\n2/3 0\n0 1/3\n")
    res = runner.invoke(main, ["solve", str(p)])
    assert res.exit_code == 0 and "0.222222222222" in res.output


def test_solve_non_unique_exits_one(runner):
    assert runner.invoke(main, ["solve", "--inline", "1,0;1,0"]).exit_code == 1


def test_solve_parse_error_exits_two(runner):
    res = runner.invoke(main, ["solve", "--inline", "1,0;x,2"])
    assert res.exit_code == 2
    assert "column 5" in res.output


def test_match_pure_row(runner):
    res = runner.invoke(main, ["match", "--inline", "2/3,0;0,1/3", "--learner", "fixed",
                               "--learner-param", "x=[1,0]", "--adversary", "best_response",
                               "-T", "1000", "--noise", "none"])
    assert res.exit_code == 0, res.output
    assert "222.222" in res.output


def _sweep_config(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text('matrix_id = "fig1"\nmatrix = "2/3, 0; 0, 1/3"\nhorizons = [10]\ntrials = 1\n'
                 'learners = ["ours", "ucb", "exp3"]\nadversaries = ["hybrid", "best_response", "adaptive"]\n')
    return p


def test_sweep_smoke(runner, tmp_path):
    cfg = _sweep_config(tmp_path)
    out = tmp_path / "out"
    runner.invoke(main, ["sweep", "--config", str(cfg), "--out", str(tmp_path / "warm")])
    start = time.perf_counter()
    res = runner.invoke(main, ["sweep", "--config", str(cfg), "--out", str(out)])
    assert time.perf_counter() - start < 1.0
    assert res.exit_code == 0, res.output
    with open(out / "raw.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 9 and all(float(r["external_regret"]) >= float(r["nash_regret"]) - 1e-9 for r in rows)
    with open(out / "aggregate.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 9
    assert (out / "slopes.csv").exists()
    compile(( out / "plot.py").read_text(), "plot.py", "exec")


def test_sweep_rerun_byte_identical(runner, tmp_path):
    cfg = _sweep_config(tmp_path)
    cfg.write_text(cfg.read_text().replace("[10]", "[10, 100]").replace("trials = 1", "trials = 3"))
    for d, threads in (("a", "1"), ("b", "3")):
        assert runner.invoke(main, ["sweep", "--config", str(cfg), "--out", str(tmp_path / d),
                                    "--threads", threads]).exit_code == 0
    for name in ("raw.csv", "aggregate.csv", "slopes.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_bad_config_lists_problems(runner, tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text('matrix = "1,0;0,1"\nhorizons = [0]\nlearners = ["nope"]\nadversaries = []\n')
    res = runner.invoke(main, ["sweep", "--config", str(p), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    assert "horizons" in res.output and "nope" in res.output and "adversaries" in res.output


def _verify(runner, *args):
    res = runner.invoke(main, ["verify", *args])
    text = res.output[res.output.index("{\n"):]
    return res, json.loads(text)


def test_verify_only(runner):
    res, doc = _verify(runner, "--only", "subroutine-bound")
    assert res.exit_code == 0
    assert [c["key"] for c in doc["criteria"]] == ["subroutine-bound"]
    assert "[PASS] 2." in res.output


def test_verify_deterministic_for_seed(runner):
    _, a = _verify(runner, "--only", "swap-identity,subroutine-bound", "--seed", "7")
    _, b = _verify(runner, "--only", "swap-identity,subroutine-bound", "--seed", "7")
    strip = lambda doc: [(c["key"], c["passed"], c["metrics"]) for c in doc["criteria"]]
    assert a["seed"] == 7 and strip(a) == strip(b)


def test_verify_unknown_suite(runner):
    assert runner.invoke(main, ["verify", "--only", "bogus"]).exit_code == 2
