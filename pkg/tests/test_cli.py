import csv
import subprocess
import sys

import numpy as np
import pytest

from survscreen.cli import main

SCENARIO = """
n = 150
d = 30
influential_fraction = 0.2
influential_block = 3
explained_variance = 0.75
censoring_rate = 0.25
seed = 9
"""


@pytest.fixture
def sim_dir(tmp_path):
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text(SCENARIO)
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(cfg), "--output-dir", str(out), "--replicates", "2"])
    assert code == 0
    return out


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_outputs(sim_dir):
    for rep in (0, 1):
        assert (sim_dir / f"data_{rep}.csv").exists()
        truth = read_rows(sim_dir / f"truth_{rep}.csv")
        assert len(truth) == 30
        assert sum(int(r["influential"]) for r in truth) == 6


def test_score_select_evaluate_compose(sim_dir, tmp_path):
    scores = tmp_path / "scores.csv"
    assert main(["score", "--input", str(sim_dir / "data_0.csv"),
                 "--method", "cars", "--output", str(scores)]) == 0
    rows = read_rows(scores)
    assert len(rows) == 30
    assert set(rows[0]) == {"name", "score", "rank"}
    ranks = sorted(int(r["rank"]) for r in rows)
    assert ranks == list(range(1, 31))

    selection = tmp_path / "selection.csv"
    assert main(["select", "--scores", str(scores), "--alpha", "0.1",
                 "--output", str(selection)]) == 0
    sel_rows = read_rows(selection)
    assert set(sel_rows[0]) == {"name", "score", "q_value", "local_fdr", "selected"}
    qs = [float(r["q_value"]) for r in sel_rows]
    assert all(0 <= q <= 1 for q in qs)

    metrics = tmp_path / "metrics.csv"
    assert main(["evaluate", "--scores", str(selection),
                 "--truth", str(sim_dir / "truth_0.csv"),
                 "--output", str(metrics)]) == 0
    got = {r["metric"]: float(r["value"]) for r in read_rows(metrics)}
    assert {"pr_auc", "rank_correlation", "tp", "fp", "fn", "tn"} <= set(got)
    assert got["tp"] + got["fp"] + got["fn"] + got["tn"] == 30


def test_evaluate_without_selection_column(sim_dir, tmp_path):
    scores = tmp_path / "scores.csv"
    main(["score", "--input", str(sim_dir / "data_0.csv"),
          "--method", "cox", "--output", str(scores)])
    metrics = tmp_path / "metrics.csv"
    assert main(["evaluate", "--scores", str(scores),
                 "--truth", str(sim_dir / "truth_0.csv"),
                 "--output", str(metrics)]) == 0
    got = {r["metric"] for r in read_rows(metrics)}
    assert got == {"pr_auc", "rank_correlation"}


def test_score_missing_column_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,status,x\n1,1,0\n2,0,1\n")
    code = main(["score", "--input", str(bad), "--output", str(tmp_path / "o.csv")])
    assert code == 2
    assert "MissingColumn" in capsys.readouterr().err


def test_score_degenerate_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,status,x\n1,0,0.1\n2,0,0.7\n3,0,0.3\n")
    code = main(["score", "--input", str(bad), "--output", str(tmp_path / "o.csv")])
    assert code == 3
    assert "DegenerateOutcome" in capsys.readouterr().err


def test_select_too_few_scores_exit_2(tmp_path, capsys):
    scores = tmp_path / "scores.csv"
    scores.write_text("name,score\n" + "".join(f"x{i},{i / 10}\n" for i in range(5)))
    code = main(["select", "--scores", str(scores), "--alpha", "0.05",
                 "--output", str(tmp_path / "o.csv")])
    assert code == 2
    assert "TooFewScores" in capsys.readouterr().err


def test_bench_and_plotdata(tmp_path):
    cfg = tmp_path / "grid.cfg"
    cfg.write_text(
        "n = 60\nd = 12\ninfluential_fraction = 0.25\ninfluential_block = 3\n"
        "explained_variance = 0.75\ncensoring_rate = 0.25\nseed = 4\n"
    )
    report = tmp_path / "report.csv"
    summary = tmp_path / "summary.csv"
    timings = tmp_path / "timings.csv"
    assert main(["bench", "--config", str(cfg), "--output", str(report),
                 "--replicates", "2", "--summary", str(summary),
                 "--timings", str(timings)]) == 0
    rows = read_rows(report)
    assert len(rows) == 4
    assert all(r["error"] == "" for r in rows)
    assert len(read_rows(summary)) == 4  # 2 methods x 2 metrics
    assert len(read_rows(timings)) == 4

    plot = tmp_path / "plot.csv"
    assert main(["plotdata", "--report", str(report), "--group-by", "n,d",
                 "--output", str(plot)]) == 0
    prows = read_rows(plot)
    assert {r["method"] for r in prows} == {"cars", "cox"}
    assert set(prows[0]) == {"n", "d", "method", "metric", "q1", "median", "q3", "count"}


def test_console_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "survscreen.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert "score" in result.stdout and "bench" in result.stdout


def test_seed_flag_overrides_config(tmp_path):
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text(SCENARIO)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    main(["simulate", "--config", str(cfg), "--output-dir", str(a)])
    main(["--seed", "123", "simulate", "--config", str(cfg), "--output-dir", str(b)])
    main(["--seed", "123", "simulate", "--config", str(cfg), "--output-dir", str(c)])
    assert (a / "data_0.csv").read_bytes() != (b / "data_0.csv").read_bytes()
    assert (b / "data_0.csv").read_bytes() == (c / "data_0.csv").read_bytes()
