"""Scenario generator: block-correlated Gaussian covariates, calibrated
log-normal survival and censoring, administrative cutoff.

The covariate correlation target is a three-block design whose within-block
entries are +-xi with the positive and negative counts balanced as far as
parity allows; cross-block correlations are zero.  The design is projected
onto the correlation-matrix set by alternating projections with Dykstra
correction before sampling.  Noise and censoring parameters are calibrated
analytically so the requested explained variance and censoring rate hold
exactly at the population level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtri

from .data import SurvivalSample
from .errors import BadDimension, BadFraction, ZeroSignal

DEFAULT_MAGNITUDES = (0.25, 0.5, 0.75)


@dataclass
class ScenarioConfig:
    """Full parameterization of one simulation scenario."""

    n: int
    d: int
    influential_fraction: float
    influential_block: int
    explained_variance: float
    censoring_rate: float
    block_magnitudes: tuple[float, float, float] = DEFAULT_MAGNITUDES
    cutoff_quantile: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.d % 3 != 0 or self.d // 3 < 2:
            raise BadDimension(f"d must be divisible by 3 with blocks >= 2, got {self.d}")
        if self.n < 2:
            raise BadDimension(f"n must be >= 2, got {self.n}")
        if self.influential_block not in (1, 2, 3):
            raise BadDimension(f"influential_block must be 1..3, got {self.influential_block}")
        if not 0.0 < self.influential_fraction < 1.0:
            raise BadFraction(f"influential_fraction must be in (0, 1), got {self.influential_fraction}")
        if not 0.0 < self.explained_variance < 1.0:
            raise ValueError("explained_variance must be in (0, 1)")
        if not 0.0 < self.censoring_rate < 1.0:
            raise ValueError("censoring_rate must be in (0, 1)")
        if not 0.0 < self.cutoff_quantile <= 1.0:
            raise ValueError("cutoff_quantile must be in (0, 1]; 1.0 disables the cutoff")
        self.block_magnitudes = tuple(float(m) for m in self.block_magnitudes)
        if len(self.block_magnitudes) != 3:
            raise ValueError("block_magnitudes must have exactly 3 entries")


@dataclass
class GroundTruth:
    """True coefficients and derived population quantities of a scenario."""

    beta: np.ndarray
    influential_set: np.ndarray
    population_theta: np.ndarray
    sigma_log: float


class NearestCorrelationResult(NamedTuple):
    matrix: np.ndarray
    iterations: int
    converged: bool


def replicate_rng(seed: int, *subkeys: int) -> np.random.Generator:
    """Counter-based generator with an independent substream per key tuple.

    Streams derived from the same seed and distinct subkeys (for instance
    (scenario_index, replicate_id)) are independent by construction, so
    results do not depend on the order in which replicates are executed.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in subkeys))
    return np.random.Generator(np.random.Philox(ss))


def _negative_split(m: int) -> int:
    """First-half size k: columns 1..k vs k+1..m carry opposite signs.

    Chosen so the counts of positive (within-half) and negative
    (cross-half) pairs are as equal as parity allows, preferring the
    smaller trailing negative group on ties.
    """
    target = m * (m - 1) / 4
    best_k, best_gap = 1, np.inf
    for k in range(1, m):
        gap = abs(k * (m - k) - target)
        if gap < best_gap or (gap == best_gap and k > best_k):
            best_k, best_gap = k, gap
    return best_k


def build_block_design(d: int, magnitudes=DEFAULT_MAGNITUDES) -> np.ndarray:
    """Three-block +-xi correlation design with zero cross-block entries."""
    if d % 3 != 0 or d // 3 < 2:
        raise BadDimension(f"d must be divisible by 3 with blocks >= 2, got {d}")
    m = d // 3
    k = _negative_split(m)
    sign = np.ones(m)
    sign[k:] = -1.0
    pattern = np.outer(sign, sign)
    out = np.zeros((d, d))
    for b, xi in enumerate(magnitudes):
        block = xi * pattern
        np.fill_diagonal(block, 1.0)
        out[b * m : (b + 1) * m, b * m : (b + 1) * m] = block
    return out


def nearest_correlation(
    a: np.ndarray, tol: float = 1e-8, max_iter: int = 500
) -> NearestCorrelationResult:
    """Nearest correlation matrix in the (unweighted) Frobenius norm.

    Alternating projections between the PSD cone and the unit-diagonal set
    with Dykstra correction, stopping when the Frobenius change between
    successive iterates drops to ``tol``.  On iteration exhaustion the best
    iterate is returned with converged=False.  The final polish floors the
    eigenvalues at 1e-10 and renormalizes the diagonal.
    """
    y = np.asarray(a, dtype=float).copy()
    correction = np.zeros_like(y)
    converged = False
    iterations = max_iter
    for it in range(1, max_iter + 1):
        r = y - correction
        w, v = np.linalg.eigh(r)
        x = (v * np.maximum(w, 0.0)) @ v.T
        x = (x + x.T) / 2
        correction = x - r
        y_new = x.copy()
        np.fill_diagonal(y_new, 1.0)
        change = float(np.linalg.norm(y_new - y))
        y = y_new
        if change <= tol:
            converged = True
            iterations = it
            break

    w, v = np.linalg.eigh(y)
    w = np.maximum(w, 1e-10)
    m = (v * w) @ v.T
    scale = np.sqrt(np.diag(m))
    m = m / np.outer(scale, scale)
    m = (m + m.T) / 2
    np.fill_diagonal(m, 1.0)
    return NearestCorrelationResult(m, iterations, converged)


def sample_covariates(corr: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. rows from N(0, corr) via a symmetric eigen-factorization."""
    w, v = np.linalg.eigh(corr)
    factor = v * np.sqrt(np.maximum(w, 0.0))
    z = rng.standard_normal((n, corr.shape[0]))
    return z @ factor.T


def make_beta(d: int, influential_fraction: float, influential_block: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients on the equidistant [-0.9, 1] grid, placed in one block.

    k = round(fraction * d) coefficients (half-up rounding) are assigned to
    evenly spread positions inside the chosen block, ascending grid value
    to ascending position.  A single coefficient takes the right endpoint 1.
    """
    m = d // 3
    k = int(math.floor(influential_fraction * d + 0.5))
    if k < 1:
        raise BadFraction(f"fraction {influential_fraction} rounds to no influential covariates")
    if k > m:
        raise BadFraction(f"{k} influential covariates exceed the block size {m}")
    if k == 1:
        offsets = np.array([(m - 1) // 2])
        values = np.array([1.0])
    else:
        offsets = np.round(np.linspace(0, m - 1, k)).astype(int)
        values = np.linspace(-0.9, 1.0, k)
    idx = (influential_block - 1) * m + offsets
    beta = np.zeros(d)
    beta[idx] = values
    return beta, idx


def calibrate_noise(beta: np.ndarray, corr: np.ndarray, explained_variance: float) -> float:
    """Noise scale sigma so that signal / (signal + sigma^2) = explained_variance."""
    signal = float(beta @ corr @ beta)
    if not np.isfinite(signal) or signal <= 0:
        raise ZeroSignal(f"signal variance {signal} is not positive")
    return math.sqrt(signal * (1.0 - explained_variance) / explained_variance)


def calibrate_censoring(signal_variance: float, sigma_log: float, target_rate: float) -> float:
    """Log-mean of the censoring distribution hitting the target rate exactly.

    The censoring log-scale is set equal to the marginal log-survival scale
    s, so with log T ~ N(0, s^2) and log C ~ N(mu_C, s^2) the pre-cutoff
    censoring probability P(C < T) equals ``target_rate``.
    """
    s2 = signal_variance + sigma_log**2
    return float(-ndtri(target_rate) * math.sqrt(2.0 * s2))


def population_scores(beta: np.ndarray, corr: np.ndarray, sigma_log: float) -> np.ndarray:
    """Population score vector corr^{1/2} beta / sd(log T) (unit variances)."""
    s = math.sqrt(float(beta @ corr @ beta) + sigma_log**2)
    w, v = np.linalg.eigh(corr)
    root = (v * np.sqrt(np.maximum(w, 0.0))) @ v.T
    return root @ beta / s


def generate_dataset(
    config: ScenarioConfig,
    replicate_id: int = 0,
    projected_corr: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[SurvivalSample, GroundTruth]:
    """One simulated dataset plus its ground truth.

    ``projected_corr`` lets callers share the (deterministic) nearest
    correlation matrix across replicates of the same scenario; ``rng``
    overrides the default (seed, replicate_id) substream.  Times above
    their empirical ``cutoff_quantile`` are set to that quantile and marked
    censored; ``cutoff_quantile=1.0`` disables the cutoff.
    """
    if projected_corr is None:
        design = build_block_design(config.d, config.block_magnitudes)
        projected_corr = nearest_correlation(design).matrix
    if rng is None:
        rng = replicate_rng(config.seed, replicate_id)

    x = sample_covariates(projected_corr, config.n, rng)
    beta, influential = make_beta(
        config.d, config.influential_fraction, config.influential_block
    )
    sigma = calibrate_noise(beta, projected_corr, config.explained_variance)
    signal = float(beta @ projected_corr @ beta)
    mu_c = calibrate_censoring(signal, sigma, config.censoring_rate)
    sigma_c = math.sqrt(signal + sigma**2)

    log_t = x @ beta + sigma * rng.standard_normal(config.n)
    log_c = mu_c + sigma_c * rng.standard_normal(config.n)
    observed = np.exp(np.minimum(log_t, log_c))
    delta = (log_t <= log_c).astype(np.int64)

    if config.cutoff_quantile < 1.0:
        cutoff = float(np.quantile(observed, config.cutoff_quantile))
        over = observed > cutoff
        observed[over] = cutoff
        delta[over] = 0

    sample = SurvivalSample.from_times(observed, delta, x)
    truth = GroundTruth(
        beta=beta,
        influential_set=influential,
        population_theta=population_scores(beta, projected_corr, sigma),
        sigma_log=sigma,
    )
    return sample, truth


# --- flat key=value scenario config files -----------------------------------

_SCALAR_PARSERS = {
    "n": int,
    "d": int,
    "influential_fraction": float,
    "influential_block": int,
    "explained_variance": float,
    "censoring_rate": float,
    "cutoff_quantile": float,
    "seed": int,
}


def _parse_magnitudes(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(":"))


def parse_config_lines(lines) -> dict:
    """Parse `key=value` lines; '#' starts a comment, blanks are skipped."""
    out: dict = {}
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "block_magnitudes":
            out[key] = _parse_magnitudes(value)
        elif key in _SCALAR_PARSERS:
            out[key] = _SCALAR_PARSERS[key](value)
        else:
            raise ValueError(f"unknown scenario key {key!r}")
    return out


def load_scenario_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return ScenarioConfig(**parse_config_lines(fh))
