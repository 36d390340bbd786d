"""Monotone density estimation on [0, 1]: Grenander and Bernstein mixtures.

The Grenander estimator is the maximum likelihood monotone density: the
slopes of the greatest convex minorant (increasing) or least concave
majorant (decreasing) of the empirical CDF anchored at (0, 0) and (1, 1).
The smooth alternative fits a mixture of beta densities with polynomial
shape parameters (degree D basis) by least squares between the mixture
CDF and the empirical CDF, under simplex and monotone-weight constraints.

Both estimators integrate to one exactly by construction, which is what
makes their evaluations valid e-values for stochastic-order nulls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import betainc, gammaln
from sklearn.isotonic import isotonic_regression

from .errors import InsufficientDataError

BERNSTEIN_DEGREE = 20
QP_MAX_ITER = 4000
QP_TOL = 1e-5


def _check_unit_samples(samples) -> np.ndarray:
    z = np.asarray(samples, dtype=float)
    if z.ndim != 1:
        z = z.reshape(-1)
    if z.size == 0:
        raise InsufficientDataError("need at least one observation")
    if np.any(z < 0) or np.any(z > 1) or not np.all(np.isfinite(z)):
        raise ValueError("samples must lie in [0, 1]")
    return z


@dataclass(frozen=True)
class StepDensity:
    """Piecewise constant monotone density on [0, 1].

    ``increasing`` fixes both the monotonicity direction and the
    continuity convention: increasing densities are right continuous
    (value at 1 is the top level), decreasing ones left continuous.
    """

    breakpoints: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)
    increasing: bool = True

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        lv = np.asarray(self.levels, dtype=float)
        if b.size != lv.size + 1 or b[0] != 0.0 or b[-1] != 1.0:
            raise ValueError("breakpoints must run from 0 to 1 with one level per cell")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(lv < 0):
            raise ValueError("levels must be non-negative")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "levels", lv)

    def _cell(self, z: float) -> int:
        z = min(max(float(z), 0.0), 1.0)
        side = "right" if self.increasing else "left"
        idx = int(np.searchsorted(self.breakpoints, z, side=side)) - 1
        return min(max(idx, 0), self.levels.size - 1)

    def pdf(self, z: float) -> float:
        return float(self.levels[self._cell(z)])

    def cdf(self, z: float) -> float:
        z = min(max(float(z), 0.0), 1.0)
        idx = min(
            max(int(np.searchsorted(self.breakpoints, z, side="right")) - 1, 0),
            self.levels.size - 1,
        )
        widths = np.diff(self.breakpoints[: idx + 1])
        below = float(self.levels[:idx] @ widths) if idx else 0.0
        return below + float(self.levels[idx]) * (z - float(self.breakpoints[idx]))

    def integral(self) -> float:
        return float(self.levels @ np.diff(self.breakpoints))


def grenander_fit(samples, increasing: bool = True) -> StepDensity:
    """Monotone maximum likelihood density of unit-interval samples.

    Increasing fits take the slopes of the greatest convex minorant of
    the empirical CDF, decreasing fits the least concave majorant, with
    the minorant/majorant anchored at (0, 0) and (1, 1).  Ties use exact
    floating-point equality.
    """
    z = _check_unit_samples(samples)
    n = z.size
    values, counts = np.unique(z, return_counts=True)
    cum = np.cumsum(counts)
    if increasing:
        # constraint height at an interior jump is the mass strictly below it
        heights = (cum - counts) / n
    else:
        heights = cum / n
    interior = (values > 0.0) & (values < 1.0)
    x = np.concatenate(([0.0], values[interior], [1.0]))
    y = np.concatenate(([0.0], heights[interior], [1.0]))
    widths = np.diff(x)
    slopes = np.diff(y) / widths
    levels = isotonic_regression(slopes, sample_weight=widths, increasing=increasing)
    return StepDensity(breakpoints=x, levels=np.maximum(levels, 0.0), increasing=increasing)


@lru_cache(maxsize=8)
def _mixture_basis(degree: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    j = np.arange(1, degree + 1, dtype=float)
    a = j
    b = degree + 1 - j
    log_norm = gammaln(degree + 1) - gammaln(a) - gammaln(b)
    return a, b, log_norm


@dataclass(frozen=True)
class BetaMixtureDensity:
    """Convex mixture of the degree-D beta basis densities."""

    weights: np.ndarray = field(repr=False)
    increasing: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        object.__setattr__(self, "weights", w)

    @property
    def degree(self) -> int:
        return int(self.weights.size)

    def pdf(self, z: float) -> float:
        z = min(max(float(z), 0.0), 1.0)
        d = self.degree
        if z == 0.0:
            return float(self.weights[0] * d)
        if z == 1.0:
            return float(self.weights[-1] * d)
        a, b, log_norm = _mixture_basis(d)
        log_basis = (a - 1.0) * math.log(z) + (b - 1.0) * math.log1p(-z) + log_norm
        return float(self.weights @ np.exp(log_basis))

    def cdf(self, z: float) -> float:
        z = min(max(float(z), 0.0), 1.0)
        a, b, _ = _mixture_basis(self.degree)
        return float(self.weights @ betainc(a, b, z))

    def integral(self) -> float:
        return float(self.weights.sum())


def _nonneg_lsq(Q: np.ndarray, c: np.ndarray, max_iter: int, tol: float) -> np.ndarray | None:
    """Active-set solver for min 1/2 u'Qu - c'u subject to u >= 0.

    Normal-equations variant of Lawson-Hanson; returns None when the
    iteration budget is exhausted or a subproblem is singular.
    """
    nvar = c.size
    passive = np.zeros(nvar, dtype=bool)
    x = np.zeros(nvar)
    grad = c.copy()
    for _ in range(max_iter):
        candidates = ~passive & (grad > tol)
        if not candidates.any():
            return x
        j = int(np.argmax(np.where(candidates, grad, -np.inf)))
        passive[j] = True
        for _ in range(max_iter):
            idx = np.flatnonzero(passive)
            try:
                s_passive = np.linalg.solve(Q[np.ix_(idx, idx)], c[idx])
            except np.linalg.LinAlgError:
                return None
            if np.all(s_passive > 0.0):
                x = np.zeros(nvar)
                x[idx] = s_passive
                break
            s = np.zeros(nvar)
            s[idx] = s_passive
            drop = passive & (s <= 0.0)
            denom = x[drop] - s[drop]
            ratios = np.where(denom > 0.0, x[drop] / np.where(denom > 0, denom, 1.0), 0.0)
            step = float(np.min(ratios))
            x = x + step * (s - x)
            passive &= x > 1e-12
            x[~passive] = 0.0
        else:
            return None
        grad = c - Q @ x
    return None


def basis_cdf_row(z: float, degree: int = BERNSTEIN_DEGREE) -> np.ndarray:
    """CDF values of the degree-D beta basis at one point."""
    a, b, _ = _mixture_basis(degree)
    return betainc(a, b, min(max(float(z), 0.0), 1.0))


def _bernstein_weights(basis_cdf: np.ndarray, ecdf: np.ndarray, increasing: bool, degree: int):
    """QP core of the mixture fit; None signals non-convergence."""
    n = ecdf.size
    # difference variables: monotone weights are cumulative sums of u >= 0
    tri = np.tril(np.ones((degree, degree))) if increasing else np.triu(np.ones((degree, degree)))
    design = basis_cdf @ tri
    simplex_row = tri.sum(axis=0)
    rho = 1e7 * n
    Q = design.T @ design + rho * np.outer(simplex_row, simplex_row)
    c = design.T @ ecdf + rho * simplex_row
    u = _nonneg_lsq(Q, c, max_iter=QP_MAX_ITER, tol=QP_TOL * max(1.0, float(n)))
    if u is None:
        return None
    w = tri @ u
    total = float(w.sum())
    if not total > 0:
        return None
    return w / total


def bernstein_fit(
    samples, increasing: bool = True, degree: int = BERNSTEIN_DEGREE
) -> BetaMixtureDensity:
    """Least-squares beta-mixture fit of the empirical CDF under monotonicity.

    The mixture weights solve a small quadratic program: simplex
    constraints plus an ordering constraint that pins the density mode to
    the appropriate endpoint.  Solved in difference variables by an exact
    active-set method (iteration cap 4000, tolerance 1e-5); on failure the
    uniform mixture (equal weights) is returned so the e-value is neutral.
    """
    z = _check_unit_samples(samples)
    if degree < 2:
        raise ValueError("degree must be >= 2")
    a, b, _ = _mixture_basis(degree)
    basis_cdf = betainc(a[None, :], b[None, :], z[:, None])
    ecdf = np.searchsorted(np.sort(z), z, side="right") / z.size
    w = _bernstein_weights(basis_cdf, ecdf, increasing, degree)
    if w is None:
        w = np.full(degree, 1.0 / degree)
    return BetaMixtureDensity(w, increasing=increasing)


def _check_support(support, *, endpoint_low: bool) -> np.ndarray:
    s = np.asarray(support, dtype=float)
    if s.ndim != 1 or s.size < 1:
        raise ValueError("support must be a non-empty vector")
    if np.any(np.diff(s) <= 0):
        raise ValueError("support must be strictly increasing")
    if endpoint_low:
        if s[0] != 0.0 or s[-1] >= 1.0:
            raise ValueError("support must start at 0 and stay below 1")
    else:
        if s[-1] != 1.0 or s[0] <= 0.0:
            raise ValueError("support must end at 1 and stay above 0")
    return s


def discretize_density(density, support) -> StepDensity:
    """Cell-average an increasing density over a finite support grid.

    For support 0 = s_1 < ... < s_k < 1 the result is constant on each
    [s_i, s_{i+1}) and on [s_k, 1], taking the average of ``density`` over
    the cell.  The output dominates the input at every support point and
    has the same unit integral.
    """
    if not getattr(density, "increasing", False):
        raise ValueError("discretize_density expects an increasing density")
    s = _check_support(support, endpoint_low=True)
    edges = np.concatenate((s, [1.0]))
    cdf_vals = np.array([density.cdf(v) for v in edges])
    cdf_vals[0] = 0.0
    cdf_vals[-1] = density.integral()
    levels = np.diff(cdf_vals) / np.diff(edges)
    return StepDensity(breakpoints=edges, levels=np.maximum(levels, 0.0), increasing=True)


def discretize_density_decreasing(density, support) -> StepDensity:
    """Mirror of :func:`discretize_density` for decreasing densities.

    The support grid satisfies 0 < s_1 < ... < s_k = 1 and the result is
    constant on [0, s_1] and on each (s_i, s_{i+1}].
    """
    if getattr(density, "increasing", True):
        raise ValueError("expects a decreasing density")
    s = _check_support(support, endpoint_low=False)
    edges = np.concatenate(([0.0], s))
    cdf_vals = np.array([density.cdf(v) for v in edges])
    cdf_vals[0] = 0.0
    cdf_vals[-1] = density.integral()
    levels = np.diff(cdf_vals) / np.diff(edges)
    return StepDensity(breakpoints=edges, levels=np.maximum(levels, 0.0), increasing=False)
