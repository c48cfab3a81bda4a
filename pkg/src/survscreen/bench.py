"""Scenario-grid benchmark runner comparing CARS and Cox screening.

A grid file is a flat key=value config whose values may be comma-separated
lists; the grid is the cartesian product of all listed values.  For every
scenario x replicate the runner simulates a dataset, computes both score
vectors and evaluates them against the ground truth.  Replicates draw from
independent counter-based substreams, so reports are byte-identical across
runs and across worker-pool sizes.

Wall times are recorded per scoring call but kept out of the report rows
proper (they go to a separate timings table) so the report itself stays
reproducible byte for byte.
"""

from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cars import cars_score
from .cox import cox_scores
from .data import fmt_float
from .errors import SurvScreenError, UnknownField
from .metrics import pr_auc, rank_correlation
from .simulate import (
    ScenarioConfig,
    build_block_design,
    generate_dataset,
    nearest_correlation,
    replicate_rng,
)

SCENARIO_FIELDS = (
    "n",
    "d",
    "influential_fraction",
    "influential_block",
    "explained_variance",
    "censoring_rate",
    "cutoff_quantile",
    "block_magnitudes",
)

_FIELD_PARSERS = {
    "n": int,
    "d": int,
    "influential_fraction": float,
    "influential_block": int,
    "explained_variance": float,
    "censoring_rate": float,
    "cutoff_quantile": float,
    "block_magnitudes": lambda s: tuple(float(p) for p in s.split(":")),
    "seed": int,
}

_DEFAULTS = {"cutoff_quantile": 0.9, "block_magnitudes": (0.25, 0.5, 0.75)}


@dataclass
class BenchRow:
    scenario: str
    replicate: int
    method: str
    pr_auc: float | None
    rank_correlation: float | None
    error: str
    wall_time: float


@dataclass
class BenchReport:
    rows: list[BenchRow]
    scenarios: dict[str, dict]

    def aggregates(self) -> list[dict]:
        """Medians and quartiles per (scenario, method, metric)."""
        out = []
        keys = sorted({(r.scenario, r.method) for r in self.rows})
        for scenario, method in keys:
            ok = [
                r for r in self.rows
                if r.scenario == scenario and r.method == method and not r.error
            ]
            for metric in ("pr_auc", "rank_correlation"):
                values = np.array([getattr(r, metric) for r in ok], dtype=float)
                if values.size:
                    q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
                else:
                    q1 = med = q3 = np.nan
                out.append(
                    {
                        "scenario": scenario,
                        "method": method,
                        "metric": metric,
                        "q1": float(q1),
                        "median": float(med),
                        "q3": float(q3),
                        "count": values.size,
                    }
                )
        return out


def _format_value(key: str, value) -> str:
    if key == "block_magnitudes":
        return ":".join(fmt_float(v) for v in value)
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def scenario_key(params: dict) -> str:
    return ";".join(f"{k}={_format_value(k, params[k])}" for k in SCENARIO_FIELDS)


def parse_grid(lines) -> tuple[list[dict], int]:
    """Parse a grid config into (scenario parameter dicts, master seed)."""
    swept: dict[str, list] = {}
    seed = 0
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "seed":
            seed = int(value)
            continue
        if key not in _FIELD_PARSERS:
            raise UnknownField(f"unknown grid key {key!r}")
        parser = _FIELD_PARSERS[key]
        swept[key] = [parser(tok.strip()) for tok in value.split(",")]
    for key, default in _DEFAULTS.items():
        swept.setdefault(key, [default])
    missing = [k for k in SCENARIO_FIELDS if k not in swept]
    if missing:
        raise UnknownField(f"grid config missing keys: {', '.join(missing)}")
    scenarios = [
        dict(zip(SCENARIO_FIELDS, combo))
        for combo in itertools.product(*(swept[k] for k in SCENARIO_FIELDS))
    ]
    return scenarios, seed


def _replicate_job(args) -> list[BenchRow]:
    params, scenario_idx, replicate, seed, nu, corr = args
    key = scenario_key(params)
    config = ScenarioConfig(**params, seed=seed)
    rng = replicate_rng(seed, scenario_idx, replicate)
    try:
        sample, truth = generate_dataset(config, projected_corr=corr, rng=rng)
    except SurvScreenError as exc:
        return [
            BenchRow(key, replicate, method, None, None, type(exc).__name__, 0.0)
            for method in ("cars", "cox")
        ]

    labels = np.zeros(config.d, dtype=int)
    labels[truth.influential_set] = 1
    rows = []
    for method, scorer in (("cars", lambda: cars_score(sample, nu=nu)),
                           ("cox", lambda: cox_scores(sample))):
        start = time.perf_counter()
        try:
            sv = scorer()
            elapsed = time.perf_counter() - start
            auc = pr_auc(np.abs(sv.scores), labels).auc
            rc = rank_correlation(truth.beta, sv.scores)
            rows.append(BenchRow(key, replicate, method, auc, rc, "", elapsed))
        except SurvScreenError as exc:
            elapsed = time.perf_counter() - start
            rows.append(
                BenchRow(key, replicate, method, None, None, type(exc).__name__, elapsed)
            )
    return rows


def run_bench(
    scenarios: list[dict],
    seed: int,
    replicates: int,
    parallelism: int = 1,
    nu: float = 1e-6,
) -> BenchReport:
    """Run the full scenario grid; per-replicate failures become error rows."""
    jobs = []
    scenario_map = {}
    for idx, params in enumerate(scenarios):
        design = build_block_design(params["d"], params["block_magnitudes"])
        corr = nearest_correlation(design).matrix
        scenario_map[scenario_key(params)] = dict(params)
        for rep in range(replicates):
            jobs.append((params, idx, rep, seed, nu, corr))

    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_replicate_job, jobs))
    else:
        results = [_replicate_job(job) for job in jobs]

    rows = [row for chunk in results for row in chunk]
    rows.sort(key=lambda r: (r.scenario, r.replicate, r.method))
    return BenchReport(rows, scenario_map)


def write_report(report: BenchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "replicate", "method", "pr_auc", "rank_correlation", "error"])
        for r in report.rows:
            writer.writerow(
                [
                    r.scenario,
                    r.replicate,
                    r.method,
                    "" if r.pr_auc is None else fmt_float(r.pr_auc),
                    "" if r.rank_correlation is None else fmt_float(r.rank_correlation),
                    r.error,
                ]
            )


def write_summary(report: BenchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "method", "metric", "q1", "median", "q3", "count"])
        for agg in report.aggregates():
            writer.writerow(
                [
                    agg["scenario"],
                    agg["method"],
                    agg["metric"],
                    fmt_float(agg["q1"]),
                    fmt_float(agg["median"]),
                    fmt_float(agg["q3"]),
                    agg["count"],
                ]
            )


def write_timings(report: BenchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "replicate", "method", "wall_time_seconds"])
        for r in report.rows:
            writer.writerow([r.scenario, r.replicate, r.method, fmt_float(r.wall_time)])


def read_report(path) -> BenchReport:
    """Load a report CSV back; scenario params are parsed from the key."""
    rows = []
    scenarios: dict[str, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            key = rec["scenario"]
            if key not in scenarios:
                params = {}
                for part in key.split(";"):
                    k, v = part.split("=", 1)
                    params[k] = _FIELD_PARSERS[k](v)
                scenarios[key] = params
            rows.append(
                BenchRow(
                    key,
                    int(rec["replicate"]),
                    rec["method"],
                    float(rec["pr_auc"]) if rec["pr_auc"] else None,
                    float(rec["rank_correlation"]) if rec["rank_correlation"] else None,
                    rec["error"],
                    0.0,
                )
            )
    return BenchReport(rows, scenarios)


def emit_plotdata(report: BenchReport, group_by: list[str]) -> list[dict]:
    """Long-format quartile summaries per (group fields, method, metric)."""
    for field in group_by:
        if field not in SCENARIO_FIELDS:
            raise UnknownField(f"unknown group-by field {field!r}")

    groups: dict[tuple, dict[str, list[float]]] = {}
    for r in report.rows:
        if r.error:
            continue
        params = report.scenarios[r.scenario]
        gkey = tuple(_format_value(f, params[f]) for f in group_by) + (r.method,)
        bucket = groups.setdefault(gkey, {"pr_auc": [], "rank_correlation": []})
        bucket["pr_auc"].append(r.pr_auc)
        bucket["rank_correlation"].append(r.rank_correlation)

    out = []
    for gkey in sorted(groups):
        for metric in ("pr_auc", "rank_correlation"):
            values = np.array(groups[gkey][metric], dtype=float)
            q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
            row = dict(zip(group_by, gkey[:-1]))
            row.update(
                method=gkey[-1],
                metric=metric,
                q1=float(q1),
                median=float(med),
                q3=float(q3),
                count=values.size,
            )
            out.append(row)
    return out


def write_plotdata(rows: list[dict], group_by: list[str], path) -> None:
    header = list(group_by) + ["method", "metric", "q1", "median", "q3", "count"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [row[f] for f in group_by]
                + [
                    row["method"],
                    row["metric"],
                    fmt_float(row["q1"]),
                    fmt_float(row["median"]),
                    fmt_float(row["q3"]),
                    row["count"],
                ]
            )
