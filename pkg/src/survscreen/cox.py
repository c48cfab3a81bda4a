"""Univariate Cox proportional-hazards scores, the screening baseline.

Each covariate is fitted on its own by Newton-Raphson maximization of the
Cox partial log-likelihood with Breslow tie handling; the score is the
standardized coefficient (Z statistic).  The partial likelihood depends on
the time ordering only, so log-scale and raw-scale times give the same fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cars import ScoreVector
from .data import SurvivalSample
from .errors import DegenerateOutcome

BETA_CAP = 15.0
SCORE_TOL = 1e-9
MAX_ITER = 25


@dataclass
class CoxFit:
    """Result of a single univariate Cox fit."""

    beta_hat: float
    standard_error: float
    z_score: float
    iterations: int
    converged: bool
    flag: str | None = None  # None, "degenerate" or "separation"


def _breslow_parts(t_sorted, ev_sorted, z_sorted, risk_start, beta):
    """Log-likelihood, score and information at beta (sorted inputs).

    ``risk_start[i]`` is the first sorted index of the risk set of
    observation i (all observations with time >= t_i).  A global shift
    keeps the exponentials from overflowing; it cancels in all ratios.
    """
    arg = beta * z_sorted
    shift = arg.max()
    e = np.exp(arg - shift)
    s0 = np.cumsum(e[::-1])[::-1]
    s1 = np.cumsum((z_sorted * e)[::-1])[::-1]
    s2 = np.cumsum((z_sorted**2 * e)[::-1])[::-1]

    ev = ev_sorted == 1
    idx = risk_start[ev]
    m1 = s1[idx] / s0[idx]
    loglik = float(np.sum(arg[ev] - (np.log(s0[idx]) + shift)))
    score = float(np.sum(z_sorted[ev] - m1))
    info = float(np.sum(s2[idx] / s0[idx] - m1**2))
    return loglik, score, info


def cox_univariate(
    times: np.ndarray,
    events: np.ndarray,
    x: np.ndarray,
    beta_cap: float = BETA_CAP,
    tol: float = SCORE_TOL,
    max_iter: int = MAX_ITER,
) -> CoxFit:
    """Fit a one-covariate Cox model and return the standardized coefficient.

    A constant covariate carries no information and returns z = 0 with the
    "degenerate" flag.  A monotone partial likelihood (perfect separation)
    caps beta at +-beta_cap, reports the z score of the capped fit and sets
    the "separation" flag with converged=False.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events)
    x = np.asarray(x, dtype=float)
    n = times.shape[0]
    if n < 2:
        raise DegenerateOutcome(f"need at least 2 observations, got {n}")
    if not (events == 1).any():
        raise DegenerateOutcome("no observed events")

    sd = x.std(ddof=1)
    if sd == 0:
        return CoxFit(0.0, np.inf, 0.0, 0, True, flag="degenerate")
    z = (x - x.mean()) / sd  # fit on standardized scale; z score is invariant
    cap = beta_cap * sd

    order = np.argsort(times, kind="stable")
    t_s, ev_s, z_s = times[order], events[order], z[order]
    risk_start = np.searchsorted(t_s, t_s, side="left")

    beta = 0.0
    loglik, score, info = _breslow_parts(t_s, ev_s, z_s, risk_start, beta)
    converged = False
    flag = None
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if info <= 0 or not np.isfinite(info):
            flag = "separation"
            break
        if abs(score) / info <= tol:
            converged = True
            iterations -= 1
            break
        step = score / info
        for _ in range(30):
            cand = beta + step
            cand_ll, cand_score, cand_info = _breslow_parts(
                t_s, ev_s, z_s, risk_start, cand
            )
            if cand_ll >= loglik - 1e-12:
                break
            step /= 2
        beta, loglik, score, info = cand, cand_ll, cand_score, cand_info
        if abs(beta) >= cap:
            flag = "separation"
            break
    else:
        iterations = max_iter

    if flag == "separation":
        beta = np.sign(beta if beta != 0 else score) * cap
        _, _, info = _breslow_parts(t_s, ev_s, z_s, risk_start, beta)
        converged = False

    se_internal = 1.0 / np.sqrt(info) if info > 0 else np.inf
    beta_hat = beta / sd
    standard_error = se_internal / sd
    z_score = 0.0 if not np.isfinite(se_internal) else beta / se_internal
    return CoxFit(beta_hat, standard_error, z_score, iterations, converged, flag)


def cox_scores(sample: SurvivalSample) -> ScoreVector:
    """Z scores from per-covariate univariate Cox fits.

    Per-column failures are downgraded to flags: degenerate covariates get
    z = 0, separated fits report the capped-fit z.
    """
    d = sample.d
    z = np.zeros(d)
    flags: list[str | None] = [None] * d
    n_iter = np.zeros(d, dtype=int)
    conv = np.zeros(d, dtype=bool)
    for j in range(d):
        fit = cox_univariate(sample.log_times, sample.events, sample.covariates[:, j])
        z[j] = fit.z_score
        flags[j] = fit.flag
        n_iter[j] = fit.iterations
        conv[j] = fit.converged
    return ScoreVector(
        z,
        "cox",
        names=sample.covariate_names,
        diagnostics={"flags": flags, "iterations": n_iter, "converged": conv},
    )
