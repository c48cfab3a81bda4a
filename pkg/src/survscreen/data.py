"""Right-censored sample container plus CSV ingestion and emission.

Observed times are log-transformed once, at construction; everything
downstream works on the log scale.  The raw-scale times are kept alongside
so that emitted CSVs reproduce the ingested values exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    MissingColumn,
    NonBinaryStatus,
    NonNumericCell,
    NonPositiveTime,
    TooFewRows,
)


def fmt_float(x: float) -> str:
    """Shortest decimal representation that round-trips to the same float."""
    return repr(float(x))


@dataclass
class SurvivalSample:
    """Log observed times, event indicators and an n x d covariate matrix.

    events[i] is 1 when the event was observed and 0 when the observation
    is censored.  ``times`` holds the raw-scale observed times.
    """

    log_times: np.ndarray
    events: np.ndarray
    covariates: np.ndarray
    covariate_names: list[str] | None = None
    times: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.log_times = np.asarray(self.log_times, dtype=float)
        self.events = np.asarray(self.events)
        self.covariates = np.atleast_2d(np.asarray(self.covariates, dtype=float))
        n = self.log_times.shape[0]
        if n < 2:
            raise TooFewRows(f"need at least 2 observations, got {n}")
        if self.events.shape[0] != n or self.covariates.shape[0] != n:
            raise ValueError("log_times, events and covariates disagree on n")
        bad = ~np.isin(self.events, (0, 1))
        if bad.any():
            raise NonBinaryStatus(int(np.flatnonzero(bad)[0]) + 1)
        self.events = self.events.astype(np.int64)
        bad = ~np.isfinite(self.log_times)
        if bad.any():
            raise NonPositiveTime(int(np.flatnonzero(bad)[0]) + 1)
        if self.times is None:
            self.times = np.exp(self.log_times)
        else:
            self.times = np.asarray(self.times, dtype=float)
        if self.covariate_names is not None:
            if len(self.covariate_names) != self.covariates.shape[1]:
                raise ValueError("covariate_names length does not match d")

    @classmethod
    def from_times(cls, times, events, covariates, covariate_names=None):
        """Build a sample from raw-scale observed times (must be > 0)."""
        times = np.asarray(times, dtype=float)
        bad = ~(np.isfinite(times) & (times > 0))
        if bad.any():
            raise NonPositiveTime(int(np.flatnonzero(bad)[0]) + 1)
        return cls(np.log(times), events, covariates, covariate_names, times=times)

    @property
    def n(self) -> int:
        return self.log_times.shape[0]

    @property
    def d(self) -> int:
        return self.covariates.shape[1]

    def names(self) -> list[str]:
        if self.covariate_names is not None:
            return list(self.covariate_names)
        return [f"x{j + 1}" for j in range(self.d)]


@dataclass
class CovariateSummary:
    """Column means and unbiased (divisor n-1) column variances."""

    means: np.ndarray
    variances: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        """Mask of zero-variance (constant) covariates."""
        return self.variances == 0.0


def covariate_summary(sample: SurvivalSample) -> CovariateSummary:
    """Unweighted per-covariate means and sample variances.

    Censoring does not affect the covariates, so no weighting is applied.
    Constant columns are flagged via ``CovariateSummary.degenerate`` rather
    than rejected; downstream scoring assigns them score 0.
    """
    # reduce along the contiguous axis of the transposed copy so each column
    # is summed in the same order regardless of how columns are partitioned
    xt = np.ascontiguousarray(sample.covariates.T)
    means = xt.mean(axis=1)
    variances = ((xt - means[:, None]) ** 2).sum(axis=1) / (sample.n - 1)
    # a constant column has zero variance exactly; do not let mean round-off
    # leave a 1e-32 residue that would defeat the degeneracy flag
    variances[(xt == xt[:, :1]).all(axis=1)] = 0.0
    return CovariateSummary(means, variances)


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except (TypeError, ValueError):
        raise NonNumericCell(row, column) from None
    if not np.isfinite(value):
        raise NonNumericCell(row, column)
    return value


def load_sample(path, time_col: str = "time", status_col: str = "status") -> SurvivalSample:
    """Read a `time,status,<covariates...>` CSV into a SurvivalSample.

    The header row is mandatory.  Every column other than the time and
    status columns is treated as a numeric covariate; missing or
    non-numeric cells are rejected.  Row indices in errors are 1-based
    data rows (header excluded).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TooFewRows("empty file") from None
        header = [h.strip() for h in header]
        for col in (time_col, status_col):
            if col not in header:
                raise MissingColumn(f"column {col!r} not found in header")
        t_idx = header.index(time_col)
        s_idx = header.index(status_col)
        cov_idx = [i for i in range(len(header)) if i not in (t_idx, s_idx)]
        names = [header[i] for i in cov_idx]

        times, events, rows = [], [], []
        for r, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise NonNumericCell(r, "<row length>")
            t = _parse_float(rec[t_idx], r, time_col)
            if t <= 0:
                raise NonPositiveTime(r)
            s = _parse_float(rec[s_idx], r, status_col)
            if s not in (0.0, 1.0):
                raise NonBinaryStatus(r)
            times.append(t)
            events.append(int(s))
            rows.append([_parse_float(rec[i], r, header[i]) for i in cov_idx])

    if len(times) < 2:
        raise TooFewRows(f"need at least 2 data rows, got {len(times)}")
    covariates = np.asarray(rows, dtype=float).reshape(len(times), len(cov_idx))
    return SurvivalSample.from_times(times, events, covariates, names or None)


def save_sample(sample: SurvivalSample, path) -> None:
    """Write the sample back to CSV with round-trip float precision."""
    names = sample.names()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "status"] + names)
        for i in range(sample.n):
            writer.writerow(
                [fmt_float(sample.times[i]), int(sample.events[i])]
                + [fmt_float(v) for v in sample.covariates[i]]
            )
