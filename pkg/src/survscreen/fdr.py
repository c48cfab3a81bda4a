"""Two-component mixture modeling of score magnitudes and FDR-based
variable selection.

The null component is a half-normal on |score| whose scale is fitted by
truncated maximum likelihood on the central part of the distribution.
Tail-area q-values compare the fitted null tail with the empirical tail
and are monotonized so that selections are nested across thresholds.  The
local fdr divides the null density by a Grenander (decreasing) estimate of
the mixture density, obtained by pool-adjacent-violators on the empirical
CDF of the magnitudes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import erf, erfc

from .cars import ScoreVector
from .errors import DegenerateScores, TooFewScores

MIN_SCORES = 20

#: fraction of |scores| used for the truncated null fit
NULL_FIT_QUANTILE = 0.75


@dataclass
class SelectionResult:
    """q-values, local fdr and the selected set at a threshold."""

    q_values: np.ndarray
    local_fdr: np.ndarray
    eta0: float
    null_scale: float
    selected: np.ndarray
    threshold_phi: float
    alpha: float | None = None


#: widened second-stage truncation: the fitted null 95% magnitude quantile
_REFIT_Z = 1.959963984540054


def _truncated_mle(a: np.ndarray, c: float) -> float:
    """Half-normal scale MLE from the magnitudes at or below c.

    Parameterized as sigma = c * t so the solve is scale-free, which keeps
    the whole pipeline equivariant under rescaling of the scores.  The
    stationarity equation is root-solved to near machine precision; a
    bounded likelihood minimization is the fallback when the bracket does
    not straddle a root.
    """
    core = a[a <= c]
    m = core.shape[0]
    sq_over_c2 = float((core**2).sum()) / c**2

    def nll(t: float) -> float:
        return (
            m * np.log(t)
            + sq_over_c2 / (2.0 * t**2)
            + m * np.log(erf(1.0 / (t * np.sqrt(2.0))))
        )

    def grad(t: float) -> float:
        u = 1.0 / (t * np.sqrt(2.0))
        trunc = m * np.sqrt(2.0 / np.pi) * np.exp(-(u**2)) / (t**2 * erf(u))
        return m / t - sq_over_c2 / t**3 - trunc

    lo, hi = 1.0 / 50.0, 50.0
    if grad(lo) < 0 < grad(hi):
        t_hat = brentq(grad, lo, hi, xtol=1e-15, rtol=8.9e-16)
    else:
        t_hat = minimize_scalar(
            nll, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
        ).x
    return c * float(t_hat)


def fit_null(scores: np.ndarray) -> tuple[float, float]:
    """Estimate (eta0, null_scale) of the half-normal null component.

    Two truncated-MLE passes over the central portion of the magnitudes:
    first below their 75th percentile, then refined below the fitted null
    95% quantile (truncating at the 75th percentile alone throws away so
    much information that the scale cannot be pinned down on realistic d).
    Sparse alternatives sit above both cutoffs, so the refit stays clean.
    eta0 is the fraction of scores inside the final cutoff divided by the
    fitted null mass there, clipped to (0, 1].
    """
    a = np.abs(np.asarray(scores, dtype=float))
    d = a.shape[0]
    if d < MIN_SCORES:
        raise TooFewScores(f"need at least {MIN_SCORES} scores, got {d}")
    if np.all(a == a[0]):
        raise DegenerateScores("all scores are identical")
    c1 = float(np.quantile(a, NULL_FIT_QUANTILE))
    if c1 <= 0:
        raise DegenerateScores("at least 75% of the scores are exactly zero")
    scale1 = _truncated_mle(a, c1)
    c2 = min(max(_REFIT_Z * scale1, c1), float(a.max()))
    null_scale = _truncated_mle(a, c2)
    m = int(np.sum(a <= c2))
    null_mass_below = float(erf(c2 / (null_scale * np.sqrt(2.0))))
    eta0 = min(1.0, (m / d) / null_mass_below)
    return eta0, null_scale


def _pava_decreasing(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted least-squares fit of a non-increasing sequence."""
    values: list[float] = []
    weights: list[float] = []
    counts: list[int] = []
    for yi, wi in zip(y, w):
        values.append(float(yi))
        weights.append(float(wi))
        counts.append(1)
        # merge while the new block breaks monotonicity
        while len(values) > 1 and values[-2] < values[-1]:
            wt = weights[-1] + weights[-2]
            merged = (values[-1] * weights[-1] + values[-2] * weights[-2]) / wt
            values[-2:] = [merged]
            weights[-2:] = [wt]
            counts[-2:] = [counts[-2] + counts[-1]]
    return np.repeat(values, counts)


def _grenander_density(a: np.ndarray) -> np.ndarray:
    """Decreasing density estimate of the magnitudes, evaluated at each one.

    Slopes of the least concave majorant of the empirical CDF on [0, max a],
    computed by pool-adjacent-violators on the raw CDF increments.  An atom
    at 0 is lumped into the first positive interval.
    """
    d = a.shape[0]
    x, counts = np.unique(a, return_counts=True)
    if x[0] == 0.0 and x.shape[0] > 1:
        counts = np.concatenate(([counts[0] + counts[1]], counts[2:]))
        grid = x[1:]
    else:
        grid = x
    gaps = np.diff(np.concatenate(([0.0], grid)))
    raw = (counts / d) / gaps
    fitted = _pava_decreasing(raw, gaps)
    idx = np.searchsorted(grid, np.maximum(a, grid[0]), side="left")
    return fitted[idx]


def q_values(scores: np.ndarray, eta0: float, null_scale: float) -> SelectionResult:
    """Tail-area q-values and local fdr under a fitted half-normal null.

    The q-value of a magnitude s is the smallest realized FDR estimate
    eta0 * (null tail beyond t) / (empirical tail fraction beyond t) over
    thresholds t <= s, which makes q non-increasing in |score| and the
    induced selections nested in the threshold.
    """
    arr = np.asarray(scores, dtype=float)
    a = np.abs(arr)
    d = a.shape[0]
    a_sorted = np.sort(a)
    grid = np.unique(a)

    count_ge = d - np.searchsorted(a_sorted, grid, side="left")
    null_tail = erfc(grid / (null_scale * np.sqrt(2.0)))
    fdr = np.minimum(1.0, eta0 * null_tail * d / count_ge)
    q_grid = np.minimum.accumulate(fdr)
    q = q_grid[np.searchsorted(grid, a)]

    f0 = np.sqrt(2.0 / np.pi) / null_scale * np.exp(-(a**2) / (2.0 * null_scale**2))
    fhat = _grenander_density(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        lfdr = np.where(fhat > 0, eta0 * f0 / fhat, 1.0)
    lfdr = np.clip(lfdr, 0.0, 1.0)

    return SelectionResult(
        q_values=q,
        local_fdr=lfdr,
        eta0=eta0,
        null_scale=null_scale,
        selected=np.empty(0, dtype=int),
        threshold_phi=np.inf,
        alpha=None,
    )


def null_model_curve(
    scores: np.ndarray, eta0: float, null_scale: float, points: int = 200
) -> dict[str, np.ndarray]:
    """Fitted null and mixture curves on a uniform magnitude grid.

    Replaces diagnostic density plots: emits the half-normal null density,
    the Grenander mixture density, the local fdr and the tail-area q-value
    at ``points`` equally spaced magnitudes, so the fit can be inspected
    externally.
    """
    a = np.abs(np.asarray(scores, dtype=float))
    grid = np.linspace(0.0, float(a.max()), points)
    f0 = np.sqrt(2.0 / np.pi) / null_scale * np.exp(
        -(grid**2) / (2.0 * null_scale**2)
    )

    d = a.shape[0]
    x, counts = np.unique(a, return_counts=True)
    if x[0] == 0.0 and x.shape[0] > 1:
        counts = np.concatenate(([counts[0] + counts[1]], counts[2:]))
        x = x[1:]
    gaps = np.diff(np.concatenate(([0.0], x)))
    slopes = _pava_decreasing((counts / d) / gaps, gaps)
    idx = np.minimum(np.searchsorted(x, grid, side="left"), x.shape[0] - 1)
    mixture = slopes[idx]

    with np.errstate(divide="ignore", invalid="ignore"):
        lfdr = np.where(mixture > 0, eta0 * f0 / mixture, 1.0)
    lfdr = np.clip(lfdr, 0.0, 1.0)

    a_sorted = np.sort(a)
    count_ge = np.maximum(d - np.searchsorted(a_sorted, grid, side="left"), 1)
    fdr = np.minimum(1.0, eta0 * erfc(grid / (null_scale * np.sqrt(2.0))) * d / count_ge)
    q = np.minimum.accumulate(fdr)

    return {
        "magnitude": grid,
        "null_density": eta0 * f0,
        "mixture_density": mixture,
        "local_fdr": lfdr,
        "q_value": q,
    }


def select(scores: ScoreVector | np.ndarray, alpha: float) -> SelectionResult:
    """Fit the null, compute q-values and select covariates with q <= alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    arr = scores.scores if isinstance(scores, ScoreVector) else np.asarray(scores)
    eta0, null_scale = fit_null(arr)
    result = q_values(arr, eta0, null_scale)
    selected = np.flatnonzero(result.q_values <= alpha)
    magnitudes = np.abs(arr)
    threshold = float(magnitudes[selected].min()) if selected.size else np.inf
    result.selected = selected
    result.threshold_phi = threshold
    result.alpha = alpha
    return result
