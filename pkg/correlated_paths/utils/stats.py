"""Normal distribution helpers and confidence intervals."""

import math

import numpy as np
from scipy import special, stats

from correlated_paths import DEFAULT_SETTINGS
from correlated_paths.exceptions import DomainError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def normal_cdf(x):
    """Standard normal CDF."""
    return special.ndtr(x)


def normal_quantile(p):
    """Standard normal quantile, refined by one Newton step against :func:`normal_cdf`."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"Normal quantile needs p in (0, 1), got {p}")
    x = float(special.ndtri(p))
    density = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
    if density > 0:
        x -= (float(special.ndtr(x)) - p) / density
    return x


def two_sided_mass(t):
    """P(|Z| <= t) = 2 * Phi(t) - 1 for a standard normal Z, computed as erf(t / sqrt(2))."""
    return special.erf(np.asarray(t, dtype=np.float64) / _SQRT2)


def wilson_interval(successes, trials, confidence_level=None):
    """Return ``(estimate, lo, hi)`` for a binomial proportion with a Wilson score interval."""
    confidence_level = confidence_level or DEFAULT_SETTINGS["confidence_level"]
    if trials <= 0:
        raise DomainError(f"Wilson interval needs at least one trial, got {trials}")
    interval = stats.binomtest(int(successes), int(trials)).proportion_ci(
        confidence_level=confidence_level, method="wilson"
    )
    estimate = successes / trials
    # Rounding can push an end a few ulps past the estimate at 0 or trials successes
    return estimate, min(max(float(interval.low), 0.0), estimate), max(min(float(interval.high), 1.0), estimate)


def wilson_radius(successes, trials, confidence_level=None):
    """Half-width of the Wilson interval, the larger of the two sides."""
    estimate, lo, hi = wilson_interval(successes, trials, confidence_level)
    return max(estimate - lo, hi - estimate)


def mean_interval(values, generator, confidence_level=None, n_resamples=None):
    """Return ``(mean, lo, hi)`` for the mean of ``values`` with a percentile bootstrap interval.

    A constant sample yields a degenerate interval at the mean.
    """
    confidence_level = confidence_level or DEFAULT_SETTINGS["confidence_level"]
    n_resamples = n_resamples or DEFAULT_SETTINGS["bootstrap_resamples"]
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    if values.size < 2 or np.ptp(values) == 0:
        return mean, mean, mean
    result = stats.bootstrap(
        (values,),
        np.mean,
        confidence_level=confidence_level,
        n_resamples=n_resamples,
        method="percentile",
        batch=50,
        rng=generator,
    )
    return mean, float(result.confidence_interval.low), float(result.confidence_interval.high)


def standard_error(values):
    """Monte Carlo standard error of the mean."""
    values = np.asarray(values, dtype=np.float64)
    return float(values.std(ddof=1) / math.sqrt(values.size))


def top_decile_share(values):
    """Share of the total carried by the largest 10% of non-negative ``values``."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    total = values.sum()
    if total <= 0:
        return 0.0
    top = max(1, values.size // 10)
    return float(values[-top:].sum() / total)
