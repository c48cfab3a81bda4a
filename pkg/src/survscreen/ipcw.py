"""Kaplan-Meier censoring curve and IPC-weighted moment estimators.

The censoring survivor function G is estimated by the product-limit
formula applied with the event/censoring roles swapped.  Observed events
then receive weight 1/G at their own time and censored observations
weight 0, which corrects the moment estimators for censoring bias.

All weighted moments divide by n (not by the sum of weights, and not by
n-1); covariate variances keep the unbiased n-1 divisor.  The mixed
divisors are deliberate and can push correlations slightly outside
[-1, 1]; excursions beyond 1e-8 are left visible rather than clamped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import CovariateSummary, SurvivalSample, fmt_float
from .errors import DegenerateOutcome

#: correlations are clamped into [-1, 1] only when they exceed by at most this
CLAMP_TOL = 1e-8

#: weighted variance at or below this is treated as a degenerate outcome
VARIANCE_FLOOR = 1e-14


@dataclass
class CensoringSurvivorCurve:
    """Product-limit estimate of the censoring survivor function.

    ``evaluate(y)`` multiplies the factors of all jumps with jump time <= y.
    Ties between an event and a censoring at the identical time are broken
    event-first: the event is taken to precede the censoring, so event
    weights at a tied time exclude that time's jump (see ``evaluate_left``).
    This keeps weights finite at the largest event time.
    """

    jump_times: np.ndarray
    values: np.ndarray

    def _eval(self, y, side: str):
        idx = np.searchsorted(self.jump_times, np.asarray(y, dtype=float), side=side)
        padded = np.concatenate(([1.0], self.values))
        out = padded[idx]
        if np.ndim(y) == 0:
            return float(out)
        return out

    def evaluate(self, y):
        """Survivor value including jumps at exactly y (<= convention)."""
        return self._eval(y, "right")

    def evaluate_left(self, y):
        """Survivor value just before y; used for event weights at ties."""
        return self._eval(y, "left")


@dataclass
class IpcWeightSet:
    """Per-observation IPC weights together with the positivity floor used."""

    weights: np.ndarray
    nu: float
    floor_applied: bool


def censoring_km(sample: SurvivalSample) -> CensoringSurvivorCurve:
    """Kaplan-Meier estimate of the censoring survivor function.

    Jumps occur at distinct censoring times; the risk set at a time y is
    every observation with log time >= y.  A sample without censored
    observations yields the constant curve 1.
    """
    t = sample.log_times
    censored = sample.events == 0
    if not censored.any():
        return CensoringSurvivorCurve(np.empty(0), np.empty(0))
    jump_times, n_cens = np.unique(t[censored], return_counts=True)
    all_sorted = np.sort(t)
    at_risk = sample.n - np.searchsorted(all_sorted, jump_times, side="left")
    factors = 1.0 - n_cens / at_risk
    return CensoringSurvivorCurve(jump_times, np.cumprod(factors))


def ipc_weights(sample: SurvivalSample, curve: CensoringSurvivorCurve, nu: float) -> IpcWeightSet:
    """Inverse-probability-of-censoring weights with positivity floor nu.

    Censored observations get weight exactly 0; an observed event at log
    time y gets 1 / max(G(y), nu) where G uses the event-first tie rule.
    """
    if not 0.0 < nu < 1.0:
        raise ValueError(f"nu must be in (0, 1), got {nu}")
    g = curve.evaluate_left(sample.log_times)
    is_event = sample.events == 1
    weights = np.where(is_event, 1.0 / np.maximum(g, nu), 0.0)
    floor_applied = bool(np.any(is_event & (g < nu)))
    return IpcWeightSet(weights, nu, floor_applied)


def weighted_mean(sample: SurvivalSample, weights: np.ndarray) -> float:
    """(1/n) sum of w_i * log t_i; the divisor is n, not sum(w)."""
    return float(np.sum(weights * sample.log_times) / sample.n)


def weighted_variance(sample: SurvivalSample, weights: np.ndarray, mean_w: float) -> float:
    """(1/n) sum of w_i (log t_i - mean_w)^2.

    Raises DegenerateOutcome when the spread of observed events is
    numerically zero (all events at a single time).
    """
    value = float(np.sum(weights * (sample.log_times - mean_w) ** 2) / sample.n)
    if value <= VARIANCE_FLOOR:
        raise DegenerateOutcome(
            f"weighted outcome variance {value:.3e} is not positive"
        )
    return value


def weighted_covariances(
    sample: SurvivalSample,
    weights: np.ndarray,
    mean_w: float,
    summary: CovariateSummary,
) -> np.ndarray:
    """IPC-weighted covariance of each covariate with the log outcome.

    Covariates are centered at their unweighted means.  Each column is
    reduced along contiguous memory with a fixed summation order, so
    partitioning work across columns cannot change a single bit.
    """
    wy = weights * (sample.log_times - mean_w)
    centered_t = np.ascontiguousarray(sample.covariates.T) - summary.means[:, None]
    return (centered_t * wy).sum(axis=1) / sample.n


def correlation_vector(
    covariances: np.ndarray, summary: CovariateSummary, var_w: float
) -> np.ndarray:
    """Per-covariate correlation with the log outcome.

    Zero-variance covariates map to 0.  Values outside [-1, 1] by at most
    CLAMP_TOL are clamped; larger excursions (possible because of the
    mixed n vs n-1 divisors) are returned as-is so callers can flag them.
    """
    if var_w <= 0:
        raise DegenerateOutcome("weighted outcome variance must be positive")
    out = np.zeros_like(covariances, dtype=float)
    ok = summary.variances > 0
    out[ok] = covariances[ok] / (np.sqrt(summary.variances[ok]) * np.sqrt(var_w))
    excess = np.abs(out) - 1.0
    clampable = (excess > 0) & (excess <= CLAMP_TOL)
    out[clampable] = np.sign(out[clampable])
    return out


def save_censoring_curve(curve: CensoringSurvivorCurve, path) -> None:
    """Export the curve as a two-column (jump_time, value) diagnostic CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["jump_time", "value"])
        for t, v in zip(curve.jump_times, curve.values):
            writer.writerow([fmt_float(t), fmt_float(v)])
