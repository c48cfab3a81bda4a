"""Correlation-adjusted survival (CARS) scores.

The score vector is the inverse square root of the shrunk covariate
correlation matrix applied to the IPC-weighted covariate/outcome
correlation vector: the correlation between the de-correlated covariates
and the log survival time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SurvivalSample, covariate_summary
from .errors import DegenerateOutcome
from .ipcw import (
    censoring_km,
    correlation_vector,
    ipc_weights,
    weighted_covariances,
    weighted_mean,
    weighted_variance,
)
from .shrinkage import whitener_from_data

DEFAULT_NU = 1e-6


@dataclass
class ScoreVector:
    """Per-covariate screening scores with a method tag and diagnostics."""

    scores: np.ndarray
    method: str
    names: list[str] | None = None
    diagnostics: dict = field(default_factory=dict)


def cars_score(
    sample: SurvivalSample,
    nu: float = DEFAULT_NU,
    lambda_override: float | None = None,
) -> ScoreVector:
    """CARS scores for every covariate of the sample.

    Pipeline: censoring Kaplan-Meier -> IPC weights -> weighted moments ->
    correlation vector -> shrinkage whitening.  The shrinkage weight is
    estimated from the data unless ``lambda_override`` is given
    (``lambda_override=1`` yields identity whitening, i.e. plain marginal
    correlations).

    Degenerate (constant) covariates score exactly 0.  Samples without
    any observed event, or with all events at one time, raise
    DegenerateOutcome.
    """
    is_event = sample.events == 1
    if not is_event.any():
        raise DegenerateOutcome("sample contains no observed events")
    if np.unique(sample.log_times[is_event]).size < 2:
        raise DegenerateOutcome("all observed events share a single time")
    if lambda_override is not None and not 0.0 <= lambda_override <= 1.0:
        raise ValueError("lambda_override must be in [0, 1]")

    curve = censoring_km(sample)
    ws = ipc_weights(sample, curve, nu)
    summary = covariate_summary(sample)
    mean_w = weighted_mean(sample, ws.weights)
    var_w = weighted_variance(sample, ws.weights, mean_w)
    covs = weighted_covariances(sample, ws.weights, mean_w, summary)
    corr = correlation_vector(covs, summary, var_w)

    if sample.d == 1:
        lam_used, min_eig = (lambda_override or 0.0), 1.0
        theta = corr.copy()
    else:
        whitener, lam_used, min_eig = whitener_from_data(
            sample.covariates, lambda_override
        )
        theta = whitener.apply(corr)

    degenerate = summary.degenerate
    theta[degenerate] = 0.0

    return ScoreVector(
        theta,
        "cars",
        names=sample.covariate_names,
        diagnostics={
            "shrinkage": lam_used,
            "min_eigenvalue": min_eig,
            "nu": ws.nu,
            "floor_applied": ws.floor_applied,
            "degenerate": degenerate,
            "correlation_out_of_range": np.abs(corr) > 1.0,
        },
    )


def rank_by_magnitude(scores: ScoreVector | np.ndarray) -> np.ndarray:
    """Covariate indices ordered by |score| descending, ties by index.

    Returns 0-based indices; the CLI reports 1-based ranks derived from
    this order.
    """
    values = scores.scores if isinstance(scores, ScoreVector) else np.asarray(scores)
    d = len(values)
    # lexsort uses the last key as primary; index ascent breaks ties
    return np.lexsort((np.arange(d), -np.abs(values)))
