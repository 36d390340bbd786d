"""E-values for stochastic-order nulls and for quantile-forecast calibration.

The null that the observed values are stochastically smaller than uniform
admits exactly the increasing unit-integral densities as e-value maps;
the mirrored null admits the decreasing ones.  Strategies here fit a
monotone density (Grenander step function or Bernstein beta mixture) to
past values in each lag residue and evaluate it at the next observation,
with the correction E -> 1/t + (1 - 1/t) E to keep the bet solvent.

Quantile calibration combines an increasing fit on the upper quantile
PIT with a decreasing fit on the lower quantile PIT; the average of the
two component e-values tests the intersection null.  When a component's
values are detected to live on a finite grid, the Bernstein density is
replaced by its cell averages over that grid, which dominates the smooth
density at every support point.
"""

from __future__ import annotations

import bisect

import numpy as np

from .monotone import (
    BERNSTEIN_DEGREE,
    BetaMixtureDensity,
    _bernstein_weights,
    basis_cdf_row,
    discretize_density,
    discretize_density_decreasing,
    grenander_fit,
)

STOCH_WARMUP = 10
ESTIMATORS = ("grenander", "bernstein")
NULLS = ("st", "st-mirror")


def _check_unit(z: float) -> float:
    z = float(z)
    if not (0.0 <= z <= 1.0):
        raise ValueError(f"observation must be in [0, 1], got {z!r}")
    return z


class _MonotoneResidue:
    """Past values of one lag residue plus the machinery to fit them.

    Basis-CDF rows for the Bernstein fit are cached per observation, so a
    refit costs one small quadratic program rather than a rebuild of the
    whole design matrix.
    """

    def __init__(self, increasing: bool, estimator: str, degree: int):
        self.increasing = increasing
        self.estimator = estimator
        self.degree = degree
        self.values: list[float] = []
        self.sorted_values: list[float] = []
        self.distinct: set[float] = set()
        self._basis = np.empty((0, degree))

    def add(self, z: float) -> None:
        self.values.append(z)
        bisect.insort(self.sorted_values, z)
        self.distinct.add(z)
        if self.estimator == "bernstein":
            n = len(self.values)
            if n > self._basis.shape[0]:
                grown = np.empty((max(16, 2 * self._basis.shape[0]), self.degree))
                grown[: n - 1] = self._basis[: n - 1]
                self._basis = grown
            self._basis[n - 1] = basis_cdf_row(z, self.degree)

    @property
    def n(self) -> int:
        return len(self.values)

    def _gridded_support(self) -> np.ndarray | None:
        # a finite grid announces itself through heavy duplication
        if 2 * len(self.distinct) > self.n:
            return None
        pts = sorted(self.distinct)
        if self.increasing:
            support = np.array(pts if pts[0] == 0.0 else [0.0] + pts)
            return support if support[-1] < 1.0 else None
        support = np.array(pts if pts[-1] == 1.0 else pts + [1.0])
        return support if support[0] > 0.0 else None

    def density(self, adapt_to_grid: bool = False):
        if self.estimator == "grenander":
            return grenander_fit(self.values, increasing=self.increasing)
        ecdf = np.searchsorted(self.sorted_values, self.values, side="right") / self.n
        weights = _bernstein_weights(
            self._basis[: self.n], ecdf, self.increasing, self.degree
        )
        if weights is None:
            weights = np.full(self.degree, 1.0 / self.degree)
        fitted = BetaMixtureDensity(weights, increasing=self.increasing)
        if adapt_to_grid:
            support = self._gridded_support()
            if support is not None:
                if self.increasing:
                    return discretize_density(fitted, support)
                return discretize_density_decreasing(fitted, support)
        return fitted


def _corrected(raw: float, t: int) -> float:
    lam = 1.0 / t
    return lam + (1.0 - lam) * raw


class StochOrderBettingStrategy:
    """Monotone-density e-values for one stochastic-order null.

    Parameters
    ----------
    lag : int
        Forecast lag; fits are separated by lag residue.
    null : str
        ``"st"`` for values stochastically smaller than uniform
        (increasing density), ``"st-mirror"`` for the mirrored null
        (decreasing density).
    estimator : str
        ``"grenander"`` or ``"bernstein"``.
    """

    def __init__(
        self,
        lag: int = 1,
        null: str = "st",
        estimator: str = "grenander",
        warmup: int = STOCH_WARMUP,
        degree: int = BERNSTEIN_DEGREE,
    ):
        if lag < 1:
            raise ValueError("lag must be >= 1")
        if null not in NULLS:
            raise ValueError(f"null must be one of {NULLS}")
        if estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        self.lag = lag
        self.warmup = int(warmup)
        increasing = null == "st"
        self._t = 0
        self._residues = [
            _MonotoneResidue(increasing, estimator, degree) for _ in range(lag)
        ]

    def step(self, z: float) -> float:
        z = _check_unit(z)
        self._t += 1
        residue = self._residues[(self._t - 1) % self.lag]
        if self._t <= self.warmup * self.lag or residue.n == 0:
            e = 1.0
        else:
            e = _corrected(residue.density().pdf(z), self._t)
        residue.add(z)
        return e


def stoch_order_betting_stream(
    zs,
    lag: int = 1,
    null: str = "st",
    estimator: str = "grenander",
    warmup: int = STOCH_WARMUP,
) -> np.ndarray:
    """E-values of the stochastic-order strategy over a whole series."""
    strategy = StochOrderBettingStrategy(lag=lag, null=null, estimator=estimator, warmup=warmup)
    return np.array([strategy.step(z) for z in zs])


class QuantilePairBettingStrategy:
    """Averaged e-values testing calibration of quantile forecasts.

    Fits an increasing density to past upper quantile PIT values and a
    decreasing density to past lower ones (per lag residue), corrects
    each component with the 1/t mixture, and emits the average.
    """

    def __init__(
        self,
        lag: int = 1,
        estimator: str = "grenander",
        warmup: int = STOCH_WARMUP,
        degree: int = BERNSTEIN_DEGREE,
    ):
        if lag < 1:
            raise ValueError("lag must be >= 1")
        if estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        self.lag = lag
        self.warmup = int(warmup)
        self.estimator = estimator
        self._t = 0
        self._upper = [_MonotoneResidue(True, estimator, degree) for _ in range(lag)]
        self._lower = [_MonotoneResidue(False, estimator, degree) for _ in range(lag)]

    def step(self, pair) -> float:
        z_u, z_l = pair
        z_u = _check_unit(z_u)
        z_l = _check_unit(z_l)
        if z_u > z_l:
            raise ValueError(f"upper quantile PIT exceeds lower: {pair!r}")
        self._t += 1
        k = (self._t - 1) % self.lag
        upper, lower = self._upper[k], self._lower[k]
        if self._t <= self.warmup * self.lag or upper.n == 0:
            e = 1.0
        else:
            e_upper = _corrected(upper.density(adapt_to_grid=True).pdf(z_u), self._t)
            e_lower = _corrected(lower.density(adapt_to_grid=True).pdf(z_l), self._t)
            e = 0.5 * (e_upper + e_lower)
        upper.add(z_u)
        lower.add(z_l)
        return e


def quantile_calibration_stream(
    pairs,
    lag: int = 1,
    estimator: str = "grenander",
    warmup: int = STOCH_WARMUP,
) -> np.ndarray:
    """E-values of the quantile-pair strategy over a series of (z_u, z_l)."""
    strategy = QuantilePairBettingStrategy(lag=lag, estimator=estimator, warmup=warmup)
    return np.array([strategy.step(pair) for pair in pairs])
