"""Sequential e-values for testing uniformity on {1, ..., m}.

The parametric strategy bets a beta-binomial mass function fitted by
Newton maximum likelihood; the nonparametric one bets the Laplace
smoothed empirical frequencies (one artificial observation per category).
Both emit E_t = m * p_hat(r_t) so the conditional expectation under the
discrete uniform null is the total mass of p_hat.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betaln, gammaln, polygamma, psi

from .errors import InsufficientDataError

BETABINOMIAL_WARMUP = 20
EMPIRICAL_WARMUP = 10
PARAM_BOUNDS = (0.001, 100.0)
_STEP_TOL = 1e-7
_MAX_NEWTON_ITER = 20


def _check_category(r, m: int) -> int:
    r_int = int(r)
    if r_int != r or not (1 <= r_int <= m):
        raise ValueError(f"category must be an integer in 1..{m}, got {r!r}")
    return r_int


def betabinomial_pmf(r: int, m: int, alpha: float, beta: float) -> float:
    """Beta-binomial mass at r in {1, ..., m}:

        C(m-1, r-1) B(alpha + r - 1, beta + m - r) / B(alpha, beta).

    The masses sum to one over r for any positive (alpha, beta) and reduce
    to 1/m at alpha = beta = 1.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    r = _check_category(r, m)
    if alpha == 1.0 and beta == 1.0:
        return 1.0 / m  # uniform member, exact
    log_choose = gammaln(m) - gammaln(r) - gammaln(m - r + 1)
    return math.exp(
        log_choose + betaln(alpha + r - 1, beta + m - r) - betaln(alpha, beta)
    )


def betabinomial_pmf_vector(m: int, alpha: float, beta: float) -> np.ndarray:
    """Full mass vector over r = 1..m (vectorized counterpart of the pmf)."""
    if alpha == 1.0 and beta == 1.0:
        return np.full(m, 1.0 / m)
    r = np.arange(1, m + 1)
    log_choose = gammaln(m) - gammaln(r) - gammaln(m - r + 1)
    log_b = (
        gammaln(alpha + r - 1)
        + gammaln(beta + m - r)
        - gammaln(alpha + beta + m - 1)
    )
    return np.exp(log_choose + log_b - betaln(alpha, beta))


def _clamp(x: float) -> float:
    lo, hi = PARAM_BOUNDS
    if not math.isfinite(x):
        return 1.0
    return min(max(x, lo), hi)


def _moment_start(counts: np.ndarray) -> tuple[float, float]:
    n = counts.sum()
    x = np.arange(counts.size, dtype=float)  # r - 1
    trials = counts.size - 1.0
    m1 = float(counts @ x) / n
    m2 = float(counts @ (x * x)) / n
    if m1 <= 0 or trials <= 0:
        return 1.0, 1.0
    denom = trials * (m2 / m1 - m1 - 1.0) + m1
    if denom == 0 or not math.isfinite(denom):
        return 1.0, 1.0
    a = (trials * m1 - m2) / denom
    b = (trials - m1) * (trials - m2 / m1) / denom
    if not (a > 0 and b > 0):
        return 1.0, 1.0
    return _clamp(a), _clamp(b)


def fit_betabinomial_mle(counts) -> tuple[float, float]:
    """Newton MLE of (alpha, beta) from a category count vector.

    Starts at the moment estimate, stops when |d alpha| + |d beta| <= 1e-7
    or after 20 iterations, clamps to [0.001, 100], and falls back to the
    neutral (1, 1) if an iteration produces a singular system or NaN.
    """
    k = np.asarray(counts, dtype=float)
    if k.ndim != 1 or k.size < 2:
        raise ValueError("counts must be a vector with at least 2 categories")
    if np.any(k < 0):
        raise ValueError("counts must be non-negative")
    n = float(k.sum())
    if n < 1:
        raise InsufficientDataError("no observations to fit")
    m = k.size
    r_idx = np.arange(m, dtype=float)  # r - 1
    a, b = _moment_start(k)
    args = np.empty(2 * m + 4)
    for _ in range(_MAX_NEWTON_ITER):
        args[:m] = a + r_idx
        args[m : 2 * m] = b + m - 1 - r_idx
        args[2 * m :] = (a, b, a + b, a + b + m - 1)
        dg = psi(args)
        tg = polygamma(1, args)
        dg_ab = dg[2 * m :]
        tg_ab = tg[2 * m :]
        ga = float(k @ dg[:m]) - n * (dg_ab[3] + dg_ab[0] - dg_ab[2])
        gb = float(k @ dg[m : 2 * m]) - n * (dg_ab[3] + dg_ab[1] - dg_ab[2])
        haa = float(k @ tg[:m]) - n * (tg_ab[3] + tg_ab[0] - tg_ab[2])
        hbb = float(k @ tg[m : 2 * m]) - n * (tg_ab[3] + tg_ab[1] - tg_ab[2])
        hab = -n * (tg_ab[3] - tg_ab[2])
        det = haa * hbb - hab * hab
        if det == 0.0 or not math.isfinite(det):
            return 1.0, 1.0
        step_a = (hbb * ga - hab * gb) / det
        step_b = (haa * gb - hab * ga) / det
        if not (math.isfinite(step_a) and math.isfinite(step_b)):
            return 1.0, 1.0
        a_new = _clamp(a - step_a)
        b_new = _clamp(b - step_b)
        delta = abs(a_new - a) + abs(b_new - b)
        a, b = a_new, b_new
        if delta <= _STEP_TOL:
            break
    return a, b


class BetaBinomialBettingStrategy:
    """Beta-binomial e-values for category data at a fixed lag."""

    def __init__(self, m: int, lag: int = 1, warmup: int = BETABINOMIAL_WARMUP):
        if m < 2:
            raise ValueError("m must be >= 2")
        if lag < 1:
            raise ValueError("lag must be >= 1")
        self.m = m
        self.lag = lag
        self.warmup = int(warmup)
        self._t = 0
        self._counts = [np.zeros(m) for _ in range(lag)]

    def step(self, r) -> float:
        r = _check_category(r, self.m)
        self._t += 1
        counts = self._counts[(self._t - 1) % self.lag]
        if self._t <= self.warmup * self.lag or counts.sum() < 2:
            e = 1.0
        else:
            a, b = fit_betabinomial_mle(counts)
            e = self.m * betabinomial_pmf_vector(self.m, a, b)[r - 1]
        counts[r - 1] += 1.0
        return float(e)


def betabinomial_betting_stream(
    rs, m: int, lag: int = 1, warmup: int = BETABINOMIAL_WARMUP
) -> np.ndarray:
    """E-values of the beta-binomial strategy over a whole series."""
    strategy = BetaBinomialBettingStrategy(m, lag=lag, warmup=warmup)
    return np.array([strategy.step(r) for r in rs])


class EmpiricalBettingStrategy:
    """Laplace-smoothed empirical-frequency e-values at a fixed lag."""

    def __init__(self, m: int, lag: int = 1, warmup: int = EMPIRICAL_WARMUP):
        if m < 2:
            raise ValueError("m must be >= 2")
        if lag < 1:
            raise ValueError("lag must be >= 1")
        self.m = m
        self.lag = lag
        self.warmup = int(warmup)
        self._t = 0
        self._counts = [np.zeros(m) for _ in range(lag)]
        self._n = [0] * lag

    def step(self, r) -> float:
        r = _check_category(r, self.m)
        self._t += 1
        k = (self._t - 1) % self.lag
        counts = self._counts[k]
        if self._t <= self.warmup * self.lag:
            e = 1.0
        else:
            e = self.m * (counts[r - 1] + 1.0) / (self._n[k] + self.m)
        counts[r - 1] += 1.0
        self._n[k] += 1
        return float(e)


def empirical_betting_stream(
    rs, m: int, lag: int = 1, warmup: int = EMPIRICAL_WARMUP
) -> np.ndarray:
    """E-values of the empirical-frequency strategy over a whole series."""
    strategy = EmpiricalBettingStrategy(m, lag=lag, warmup=warmup)
    return np.array([strategy.step(r) for r in rs])
