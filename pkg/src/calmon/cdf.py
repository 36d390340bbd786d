"""Forecast CDF representations with exact left limits.

Every distribution here exposes ``cdf(y)`` and ``cdf_left(y)`` (the left
limit F(y-)).  Continuous families return identical values for both, so
downstream randomization at discontinuities degenerates to the plain CDF
evaluation.  Discrete structure (empirical ensembles, quantile forecasts)
is handled by exact counting, never by tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr


def _check_finite(y: float) -> float:
    y = float(y)
    if not math.isfinite(y):
        raise ValueError(f"evaluation point must be finite, got {y!r}")
    return y


@dataclass(frozen=True)
class GaussianCdf:
    """Normal distribution with the N(mean, sd) parameterization by sd."""

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError("sd must be positive")

    def cdf(self, y: float) -> float:
        return float(ndtr((_check_finite(y) - self.mean) / self.sd))

    def cdf_left(self, y: float) -> float:
        return self.cdf(y)


def _logistic_cdf(y: float, location: float, scale: float) -> float:
    # expit written out to keep the scalar path cheap
    x = (y - location) / scale
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class TruncatedLogisticCdf:
    """Logistic distribution truncated at zero and renormalized.

    The density is zero on the negative axis and rescaled so the total
    mass on [0, inf) is one; the CDF is continuous everywhere.
    """

    location: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if _logistic_cdf(0.0, self.location, self.scale) >= 1.0:
            raise ValueError("no mass above the truncation point")

    def cdf(self, y: float) -> float:
        y = _check_finite(y)
        if y < 0:
            return 0.0
        l0 = _logistic_cdf(0.0, self.location, self.scale)
        return (_logistic_cdf(y, self.location, self.scale) - l0) / (1.0 - l0)

    def cdf_left(self, y: float) -> float:
        return self.cdf(y)


@dataclass(frozen=True)
class CensoredLogisticCdf:
    """Logistic distribution censored at zero.

    All mass on the non-positive axis collapses into an atom at zero, so
    the CDF jumps from 0 to the logistic CDF value at the origin.
    """

    location: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def cdf(self, y: float) -> float:
        y = _check_finite(y)
        if y < 0:
            return 0.0
        return _logistic_cdf(y, self.location, self.scale)

    def cdf_left(self, y: float) -> float:
        y = _check_finite(y)
        if y <= 0:
            return 0.0
        return _logistic_cdf(y, self.location, self.scale)


@dataclass(frozen=True)
class EmpiricalCdf:
    """Empirical CDF of an ensemble: F(y) = #{x_i <= y}/m, F(y-) = #{x_i < y}/m."""

    ensemble: np.ndarray = field(repr=False)

    def __post_init__(self):
        x = np.sort(np.asarray(self.ensemble, dtype=float))
        if x.size == 0:
            raise ValueError("ensemble must not be empty")
        if not np.all(np.isfinite(x)):
            raise ValueError("ensemble members must be finite")
        object.__setattr__(self, "ensemble", x)

    @property
    def size(self) -> int:
        return int(self.ensemble.size)

    def cdf(self, y: float) -> float:
        y = _check_finite(y)
        return float(np.searchsorted(self.ensemble, y, side="right")) / self.size

    def cdf_left(self, y: float) -> float:
        y = _check_finite(y)
        return float(np.searchsorted(self.ensemble, y, side="left")) / self.size


def _check_quantile_forecast(levels, quantiles) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(levels, dtype=float)
    q = np.asarray(quantiles, dtype=float)
    if a.ndim != 1 or a.size == 0 or a.shape != q.shape:
        raise ValueError("levels and quantiles must be 1-d arrays of equal length")
    if not (np.all(np.diff(a) > 0) and a[0] > 0 and a[-1] < 1):
        raise ValueError("levels must be strictly increasing inside (0, 1)")
    if np.any(np.diff(q) < 0):
        raise ValueError("quantiles must be non-decreasing")
    if not np.all(np.isfinite(q)):
        raise ValueError("quantiles must be finite")
    return a, q


class _QuantileForecastCdf:
    """Shared machinery for the two defective CDFs built from quantile forecasts.

    With padded levels a_0 = 0 < a_1 < ... < a_K < a_{K+1} = 1 the partial
    sums telescope, so both CDFs reduce to a padded-level lookup at the
    count of quantiles below the evaluation point.
    """

    # index shift into the padded level array: 0 for the upper CDF, 1 for the lower
    _shift = 0

    def __init__(self, levels, quantiles):
        a, q = _check_quantile_forecast(levels, quantiles)
        self.levels = a
        self.quantiles = q
        self._padded = np.concatenate(([0.0], a, [1.0]))

    def cdf(self, y: float) -> float:
        y = _check_finite(y)
        j = int(np.searchsorted(self.quantiles, y, side="right"))
        return float(self._padded[j + self._shift])

    def cdf_left(self, y: float) -> float:
        y = _check_finite(y)
        j = int(np.searchsorted(self.quantiles, y, side="left"))
        return float(self._padded[j + self._shift])


class UpperQuantileCdf(_QuantileForecastCdf):
    """Defective CDF F_u: steps of size a_i - a_{i-1} at each quantile, capped at a_K."""

    _shift = 0


class LowerQuantileCdf(_QuantileForecastCdf):
    """Defective CDF F_l: starts at a_1 and reaches one at the top quantile."""

    _shift = 1
