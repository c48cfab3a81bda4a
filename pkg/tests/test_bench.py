import numpy as np
import numpy.testing as npt
import pytest

from survscreen.bench import (
    emit_plotdata,
    parse_grid,
    read_report,
    run_bench,
    scenario_key,
    write_report,
    write_summary,
)
from survscreen.errors import UnknownField

GRID = """
n = 60
d = 12
influential_fraction = 0.25
influential_block = 3
explained_variance = 0.75
censoring_rate = 0.25
cutoff_quantile = 0.9
seed = 3
"""

SWEPT_GRID = """
n = 50, 80
d = 12
influential_fraction = 0.25
influential_block = 1, 3
explained_variance = 0.5
censoring_rate = 0.25
seed = 5
"""


def test_parse_grid_cartesian_product():
    scenarios, seed = parse_grid(SWEPT_GRID.splitlines())
    assert seed == 5
    assert len(scenarios) == 4
    assert {(s["n"], s["influential_block"]) for s in scenarios} == {
        (50, 1),
        (50, 3),
        (80, 1),
        (80, 3),
    }
    # defaults filled in
    assert all(s["cutoff_quantile"] == 0.9 for s in scenarios)


def test_parse_grid_unknown_key():
    with pytest.raises(UnknownField):
        parse_grid(["bogus = 1"])


def test_run_bench_row_count_and_order():
    scenarios, seed = parse_grid(GRID.splitlines())
    report = run_bench(scenarios, seed, replicates=3)
    assert len(report.rows) == 6  # 2 methods x 3 replicates
    keys = [(r.scenario, r.replicate, r.method) for r in report.rows]
    assert keys == sorted(keys)
    assert all(not r.error for r in report.rows)
    assert all(0 <= r.pr_auc <= 1 for r in report.rows)


def test_run_bench_deterministic_across_parallelism(tmp_path):
    scenarios, seed = parse_grid(GRID.splitlines())
    serial = run_bench(scenarios, seed, replicates=3, parallelism=1)
    pooled = run_bench(scenarios, seed, replicates=3, parallelism=2)
    p1, p2 = tmp_path / "serial.csv", tmp_path / "pooled.csv"
    write_report(serial, p1)
    write_report(pooled, p2)
    assert p1.read_bytes() == p2.read_bytes()
    s1, s2 = tmp_path / "sum1.csv", tmp_path / "sum2.csv"
    write_summary(serial, s1)
    write_summary(pooled, s2)
    assert s1.read_bytes() == s2.read_bytes()


def test_report_round_trip(tmp_path):
    scenarios, seed = parse_grid(GRID.splitlines())
    report = run_bench(scenarios, seed, replicates=2)
    path = tmp_path / "report.csv"
    write_report(report, path)
    loaded = read_report(path)
    assert len(loaded.rows) == len(report.rows)
    for a, b in zip(loaded.rows, report.rows):
        assert a.scenario == b.scenario
        assert a.method == b.method
        npt.assert_allclose(a.pr_auc, b.pr_auc)
    assert loaded.scenarios.keys() == report.scenarios.keys()


def test_plotdata_medians_match_recomputation():
    scenarios, seed = parse_grid(SWEPT_GRID.splitlines())
    report = run_bench(scenarios, seed, replicates=3)
    rows = emit_plotdata(report, ["n"])
    for row in rows:
        values = [
            r.pr_auc if row["metric"] == "pr_auc" else r.rank_correlation
            for r in report.rows
            if not r.error
            and r.method == row["method"]
            and report.scenarios[r.scenario]["n"] == int(row["n"])
        ]
        npt.assert_allclose(row["median"], np.median(values))
        assert row["count"] == len(values)


def test_plotdata_unknown_field():
    scenarios, seed = parse_grid(GRID.splitlines())
    report = run_bench(scenarios, seed, replicates=1)
    with pytest.raises(UnknownField):
        emit_plotdata(report, ["bogus"])


def test_plotdata_empty_report(tmp_path):
    from survscreen.bench import BenchReport, write_plotdata

    rows = emit_plotdata(BenchReport([], {}), ["n"])
    assert rows == []
    out = tmp_path / "plot.csv"
    write_plotdata(rows, ["n"], out)
    assert out.read_text().strip() == "n,method,metric,q1,median,q3,count"


def test_scenario_key_stable():
    scenarios, _ = parse_grid(GRID.splitlines())
    key = scenario_key(scenarios[0])
    assert key.startswith("n=60;d=12;")
    assert "block_magnitudes=0.25:0.5:0.75" in key
