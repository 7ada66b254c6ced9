"""Fitting and probability utilities used by the verification checks.

Ordinary least squares on log-log data, Kolmogorov-Smirnov distances,
exact and log-space binomial tail arithmetic, quantiles, and percentile
bootstrap intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy

from .errors import DegenerateDesign, EmptySample, OutOfRange
from .rng import rng_stream


@dataclass(frozen=True)
class FitResult:
    """Least-squares line fit with per-slope uncertainty."""

    slope: float
    intercept: float
    stderr_slope: float
    r_squared: float
    n_points: int


def fit_power_law(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    """OLS fit ys ~ slope * xs + intercept on already-transformed data.

    Callers pass log-transformed coordinates, so the slope is the power-law
    exponent. Two points give an exact fit (stderr 0, r_squared 1); fewer
    than two distinct xs raise DegenerateDesign.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateDesign("xs and ys must be equal-length 1-d sequences")
    n = x.size
    if n < 2 or np.ptp(x) == 0.0:
        raise DegenerateDesign("need at least two distinct abscissae")
    xbar = x.mean()
    ybar = y.mean()
    dx = x - xbar
    sxx = float(dx @ dx)
    slope = float(dx @ (y - ybar)) / sxx
    intercept = ybar - slope * xbar
    resid = y - slope * x - intercept
    ssr = float(resid @ resid)
    sst = float((y - ybar) @ (y - ybar))
    if n > 2:
        stderr = math.sqrt(max(ssr, 0.0) / (n - 2) / sxx)
    else:
        stderr = 0.0
    r_squared = 1.0 if sst == 0.0 else 1.0 - ssr / sst
    return FitResult(slope, intercept, stderr, r_squared, n)


def ks_distance(sample: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Two-sided KS distance between a sample and a CDF callable.

    Takes both one-sided gaps at every order statistic: sup of
    i/n - F(x_(i)) and F(x_(i)) - (i-1)/n.
    """
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    if n == 0:
        raise EmptySample("KS distance of an empty sample")
    try:
        f = np.asarray(cdf(xs), dtype=float)
        if f.shape != xs.shape:
            raise TypeError("cdf is not vectorized")
    except (TypeError, ValueError):
        f = np.array([float(cdf(float(v))) for v in xs])
    steps = np.arange(1, n + 1) / n
    d_plus = float(np.max(steps - f))
    d_minus = float(np.max(f - (steps - 1.0 / n)))
    return max(d_plus, d_minus, 0.0)


def binomial_logpmf(n: int, p: float, ks: np.ndarray) -> np.ndarray:
    return (
        gammaln(n + 1)
        - gammaln(ks + 1)
        - gammaln(n - ks + 1)
        + xlogy(ks, p)
        + xlog1py(n - ks, -p)
    )


def binomial_interval_logprob(n: int, p: float, lo: int, hi: int) -> tuple[float, float]:
    """(log P(lo <= S <= hi), log P(outside)) for S ~ Binomial(n, p).

    The complement is summed from its own two tails rather than via
    log1p(-exp(...)), so both values stay accurate when either probability
    is tiny.
    """
    if not (0 <= lo <= hi <= n):
        raise OutOfRange(f"need 0 <= lo <= hi <= n, got lo={lo}, hi={hi}, n={n}")
    if not (0.0 <= p <= 1.0):
        raise OutOfRange(f"p={p} outside [0, 1]")
    ks = np.arange(0, n + 1, dtype=float)
    lp = binomial_logpmf(n, p, ks)
    log_in = min(float(logsumexp(lp[lo : hi + 1])), 0.0)
    tails = np.concatenate([lp[:lo], lp[hi + 1 :]])
    log_out = float(logsumexp(tails)) if tails.size else -math.inf
    return log_in, log_out


def binomial_count_fraction(
    n: int, lo: int, hi: int, exact: bool = False
) -> float | tuple[float, Fraction]:
    """Fraction of 2^n equal-weight outcomes with between lo and hi successes.

    Computed with exact big integers: sum_{k=lo}^{hi} C(n, k) / 2^n. Returns
    the base-10 log of the fraction; with exact=True also the fraction
    itself, which stays exact far below float underflow.
    """
    if not (0 <= lo <= hi <= n):
        raise OutOfRange(f"need 0 <= lo <= hi <= n, got lo={lo}, hi={hi}, n={n}")
    total = sum(math.comb(n, k) for k in range(lo, hi + 1))
    if total == 0:
        log10 = -math.inf
        frac = Fraction(0, 1)
    else:
        log10 = math.log10(total) - n * math.log10(2.0)
        frac = Fraction(total, 2**n)
    return (log10, frac) if exact else log10


def quantile(sample: Sequence[float], q: float) -> float:
    """Linear-interpolation quantile; q=0.5 on even n is the midpoint."""
    arr = np.asarray(sample, dtype=float)
    if arr.size == 0:
        raise EmptySample("quantile of an empty sample")
    if not (0.0 <= q <= 1.0):
        raise OutOfRange(f"quantile level {q} outside [0, 1]")
    return float(np.quantile(arr, q))


def bootstrap_ci(
    sample: Sequence[float],
    statistic: Callable[[np.ndarray], float],
    n_boot: int = 1000,
    seed: int = 0,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile bootstrap interval for statistic(sample)."""
    arr = np.asarray(sample, dtype=float)
    if arr.size == 0:
        raise EmptySample("bootstrap of an empty sample")
    if not (0.0 < level < 1.0):
        raise OutOfRange(f"confidence level {level} outside (0, 1)")
    rng = rng_stream(seed, 0)
    idx = rng.integers(0, arr.size, size=(n_boot, arr.size))
    stats = np.array([float(statistic(arr[row])) for row in idx])
    alpha = (1.0 - level) / 2.0
    return (
        float(np.quantile(stats, alpha)),
        float(np.quantile(stats, 1.0 - alpha)),
    )
