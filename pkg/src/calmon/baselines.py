"""Fixed-sample-size comparator tests: Kolmogorov-Smirnov and chi-square.

These are the classical tests the e-value methods are benchmarked
against.  P-values use the asymptotic null distributions throughout: the
Kolmogorov alternating series for the two-sided statistic, the
exponential bound exp(-2 n D^2) for one-sided statistics, and the
regularized incomplete gamma upper tail for the chi-square statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: int


def _check_unit_sample(sample) -> np.ndarray:
    z = np.asarray(sample, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("sample must be a non-empty 1-d array")
    if np.any(z < 0) or np.any(z > 1) or not np.all(np.isfinite(z)):
        raise ValueError("sample values must lie in [0, 1]")
    return np.sort(z)


def kolmogorov_sf(lam: float) -> float:
    """Upper tail 2 sum_k (-1)^(k-1) exp(-2 k^2 lam^2) of the Kolmogorov law.

    The alternating series is summed until the truncation error drops
    below 1e-12 or 100 terms are reached; for small arguments the tail is
    indistinguishable from one.
    """
    if lam <= 0.05:
        return 1.0
    total = 0.0
    sign = 1.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        sign = -sign
        if term < 1e-12:
            break
    return min(max(2.0 * total, 0.0), 1.0)


def _ks_distances(z: np.ndarray) -> tuple[float, float]:
    n = z.size
    grid_hi = np.arange(1, n + 1) / n
    grid_lo = np.arange(0, n) / n
    d_plus = float(np.max(grid_hi - z))
    d_minus = float(np.max(z - grid_lo))
    return max(d_plus, 0.0), max(d_minus, 0.0)


def ks_two_sided(sample) -> TestResult:
    """Two-sided Kolmogorov-Smirnov test of standard uniformity."""
    z = _check_unit_sample(sample)
    d_plus, d_minus = _ks_distances(z)
    d = max(d_plus, d_minus)
    return TestResult(statistic=d, p_value=kolmogorov_sf(math.sqrt(z.size) * d), n=z.size)


def ks_one_sided(sample, direction: str = "greater") -> TestResult:
    """One-sided Kolmogorov-Smirnov test of standard uniformity.

    ``direction="greater"`` uses D+ = sup(ECDF(x) - x), sensitive to the
    sample being stochastically smaller than uniform; ``"less"`` mirrors
    it.  The asymptotic p-value is exp(-2 n D^2).
    """
    z = _check_unit_sample(sample)
    d_plus, d_minus = _ks_distances(z)
    if direction == "greater":
        d = d_plus
    elif direction == "less":
        d = d_minus
    else:
        raise ValueError("direction must be 'greater' or 'less'")
    return TestResult(statistic=d, p_value=min(1.0, math.exp(-2.0 * z.size * d * d)), n=z.size)


def chisquare_uniform(counts) -> TestResult:
    """Chi-square test of uniformity from a vector of category counts."""
    k = np.asarray(counts, dtype=float)
    if k.ndim != 1 or k.size < 2:
        raise ValueError("counts must be a vector with at least 2 categories")
    if np.any(k < 0) or not np.all(np.isfinite(k)):
        raise ValueError("counts must be non-negative and finite")
    n = float(k.sum())
    if n < 1:
        raise ValueError("need at least one observation")
    expected = n / k.size
    statistic = float(np.sum((k - expected) ** 2) / expected)
    dof = k.size - 1
    return TestResult(
        statistic=statistic,
        p_value=float(gammaincc(dof / 2.0, statistic / 2.0)),
        n=int(n),
    )


def bonferroni_pair(p1: float, p2: float) -> float:
    """Bonferroni combination min(1, 2 min(p1, p2)) of two p-values."""
    return min(1.0, 2.0 * min(float(p1), float(p2)))
