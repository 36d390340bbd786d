"""Sequential e-values for testing iid uniformity of unit-interval values.

Two betting strategies are provided.  The parametric one fits a beta
density to past observations by Newton maximum likelihood and bets the
fitted density against the uniform.  The nonparametric one uses the
boundary-corrected Epanechnikov kernel estimate from :mod:`calmon.kde`,
mixed towards one with weight 1/t to keep e-values strictly positive.

At lag h, estimation is carried out separately on the h interleaved
subsamples, so the e-value at step t only depends on observations that
were available when the forecast was issued.  Observations exactly equal
to 0 or 1 yield an e-value of one and are excluded from all fitting.
"""

from __future__ import annotations

import bisect
import math

import numpy as np
from scipy.special import betaln, polygamma, psi

from .errors import BandwidthError, InsufficientDataError
from .kde import _plugin_bandwidth_stats, bin_counts, density_table, evaluate_table

BETA_WARMUP = 10
KERNEL_WARMUP = 10
PARAM_BOUNDS = (0.001, 100.0)
_LL_TOL = 1e-6
_MAX_NEWTON_ITER = 20


def beta_evalue(z: float, alpha: float, beta: float) -> float:
    """Beta(alpha, beta) density at z, with boundary points mapped to one.

    Evaluated through log-gamma so that parameters anywhere in the clamp
    box [0.001, 100] stay inside floating-point range.
    """
    z = float(z)
    if not (0.0 <= z <= 1.0):
        raise ValueError(f"z must be in [0, 1], got {z!r}")
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    if z == 0.0 or z == 1.0:
        return 1.0
    log_pdf = (
        (alpha - 1.0) * math.log(z)
        + (beta - 1.0) * math.log1p(-z)
        - betaln(alpha, beta)
    )
    return math.exp(log_pdf)


def _clamp(x: float) -> float:
    lo, hi = PARAM_BOUNDS
    if not math.isfinite(x):
        return 1.0
    return min(max(x, lo), hi)


def _moment_start(n: float, sum_z: float, sum_z2: float) -> tuple[float, float]:
    mean = sum_z / n
    var = sum_z2 / n - mean * mean
    if not (0.0 < mean < 1.0) or not var > 0.0:
        return 1.0, 1.0
    common = mean * (1.0 - mean) / var - 1.0
    if not common > 0.0:
        return 1.0, 1.0
    return _clamp(mean * common), _clamp((1.0 - mean) * common)


def _fit_beta_newton(
    n: float, sum_log: float, sum_log1m: float, start: tuple[float, float]
) -> tuple[float, float]:
    a, b = start
    ll = (a - 1.0) * sum_log + (b - 1.0) * sum_log1m - n * betaln(a, b)
    for _ in range(_MAX_NEWTON_ITER):
        dg = psi([a, b, a + b])
        tg = polygamma(1, [a, b, a + b])
        g1 = sum_log - n * (dg[0] - dg[2])
        g2 = sum_log1m - n * (dg[1] - dg[2])
        h11 = -n * (tg[0] - tg[2])
        h22 = -n * (tg[1] - tg[2])
        h12 = n * tg[2]
        det = h11 * h22 - h12 * h12
        if det == 0.0 or not math.isfinite(det):
            break
        step_a = (h22 * g1 - h12 * g2) / det
        step_b = (h11 * g2 - h12 * g1) / det
        a_new = _clamp(a - step_a)
        b_new = _clamp(b - step_b)
        ll_new = (a_new - 1.0) * sum_log + (b_new - 1.0) * sum_log1m - n * betaln(a_new, b_new)
        if not math.isfinite(ll_new):
            break
        a, b = a_new, b_new
        if abs(ll_new - ll) <= _LL_TOL:
            break
        ll = ll_new
    return a, b


def fit_beta_mle(samples) -> tuple[float, float]:
    """Maximum likelihood beta parameters from strictly interior samples.

    Boundary values are dropped before fitting.  Newton iterations start
    from the moment-matching estimate and stop when the log-likelihood
    changes by at most 1e-6 or after 20 iterations; the result is clamped
    to [0.001, 100] coordinatewise.

    Raises
    ------
    InsufficientDataError
        If fewer than two interior samples remain.
    """
    z = np.asarray(samples, dtype=float)
    if np.any(z < 0) or np.any(z > 1):
        raise ValueError("samples must lie in [0, 1]")
    z = z[(z > 0.0) & (z < 1.0)]
    if z.size < 2:
        raise InsufficientDataError("beta MLE needs at least 2 interior samples")
    start = _moment_start(z.size, float(z.sum()), float((z * z).sum()))
    return _fit_beta_newton(
        z.size, float(np.log(z).sum()), float(np.log1p(-z).sum()), start
    )


def beta_loglik_gradient(samples, alpha: float, beta: float) -> tuple[float, float]:
    """Gradient of the total beta log-likelihood at (alpha, beta)."""
    z = np.asarray(samples, dtype=float)
    z = z[(z > 0.0) & (z < 1.0)]
    dg = psi([alpha, beta, alpha + beta])
    g1 = float(np.log(z).sum()) - z.size * (dg[0] - dg[2])
    g2 = float(np.log1p(-z).sum()) - z.size * (dg[1] - dg[2])
    return g1, g2


class _BetaResidue:
    """Sufficient statistics of one interleaved subsample."""

    __slots__ = ("n", "sum_log", "sum_log1m", "sum_z", "sum_z2")

    def __init__(self):
        self.n = 0
        self.sum_log = 0.0
        self.sum_log1m = 0.0
        self.sum_z = 0.0
        self.sum_z2 = 0.0

    def add(self, z: float) -> None:
        self.n += 1
        self.sum_log += math.log(z)
        self.sum_log1m += math.log1p(-z)
        self.sum_z += z
        self.sum_z2 += z * z

    def fit(self) -> tuple[float, float]:
        start = _moment_start(self.n, self.sum_z, self.sum_z2)
        return _fit_beta_newton(self.n, self.sum_log, self.sum_log1m, start)


class BetaBettingStrategy:
    """Stateful generator of beta-density e-values at a fixed lag."""

    def __init__(self, lag: int = 1, warmup: int = BETA_WARMUP):
        if lag < 1:
            raise ValueError("lag must be >= 1")
        self.lag = lag
        self.warmup = max(int(warmup), 2)
        self._t = 0
        self._residues = [_BetaResidue() for _ in range(lag)]

    def step(self, z: float) -> float:
        """Return the e-value for ``z``, then absorb it into the fit."""
        z = float(z)
        if not (0.0 <= z <= 1.0):
            raise ValueError(f"observation must be in [0, 1], got {z!r}")
        self._t += 1
        residue = self._residues[(self._t - 1) % self.lag]
        boundary = z == 0.0 or z == 1.0
        if self._t <= self.warmup * self.lag or boundary or residue.n < 2:
            e = 1.0
        else:
            a, b = residue.fit()
            e = beta_evalue(z, a, b)
        if not boundary:
            residue.add(z)
        return e


def beta_betting_stream(zs, lag: int = 1, warmup: int = BETA_WARMUP) -> np.ndarray:
    """E-values of the beta strategy over a whole series."""
    strategy = BetaBettingStrategy(lag=lag, warmup=warmup)
    return np.array([strategy.step(z) for z in zs])


class _KernelResidue:
    """One interleaved subsample with the accumulators the bandwidth needs."""

    __slots__ = ("sorted_values", "counts", "sum_z", "sum_z2")

    def __init__(self):
        self.sorted_values: list[float] = []
        self.counts = bin_counts(np.empty(0))
        self.sum_z = 0.0
        self.sum_z2 = 0.0

    def add(self, z: float) -> None:
        bisect.insort(self.sorted_values, z)
        self.counts += bin_counts(np.array([z]))
        self.sum_z += z
        self.sum_z2 += z * z

    @property
    def n(self) -> int:
        return len(self.sorted_values)

    def _quantile(self, p: float) -> float:
        # linear interpolation between order statistics (numpy default rule)
        pos = p * (self.n - 1)
        j = int(pos)
        frac = pos - j
        vals = self.sorted_values
        return vals[j] * (1.0 - frac) + vals[min(j + 1, self.n - 1)] * frac

    def fit_table(self) -> np.ndarray:
        n = self.n
        mean = self.sum_z / n
        var = max(self.sum_z2 / n - mean * mean, 0.0) * n / (n - 1)
        bandwidth = _plugin_bandwidth_stats(
            self.counts,
            n=n,
            sd=math.sqrt(var),
            iqr=self._quantile(0.75) - self._quantile(0.25),
        )
        return density_table(np.asarray(self.sorted_values), bandwidth)


class KernelBettingStrategy:
    """Kernel-density e-values with 1/t mixing towards the uniform."""

    def __init__(self, lag: int = 1, warmup: int = KERNEL_WARMUP):
        if lag < 1:
            raise ValueError("lag must be >= 1")
        self.lag = lag
        self.warmup = int(warmup)
        self._t = 0
        self._residues = [_KernelResidue() for _ in range(lag)]

    def step(self, z: float) -> float:
        z = float(z)
        if not (0.0 <= z <= 1.0):
            raise ValueError(f"observation must be in [0, 1], got {z!r}")
        self._t += 1
        residue = self._residues[(self._t - 1) % self.lag]
        boundary = z == 0.0 or z == 1.0
        if self._t <= self.warmup * self.lag or boundary or residue.n < 2:
            e = 1.0
        else:
            try:
                table = residue.fit_table()
            except BandwidthError:
                e = 1.0
            else:
                lam = 1.0 / self._t
                e = lam + (1.0 - lam) * evaluate_table(table, z)
        if not boundary:
            residue.add(z)
        return e


def kernel_betting_stream(zs, lag: int = 1, warmup: int = KERNEL_WARMUP) -> np.ndarray:
    """E-values of the kernel strategy over a whole series."""
    strategy = KernelBettingStrategy(lag=lag, warmup=warmup)
    return np.array([strategy.step(z) for z in zs])
