"""Calibration statistics: PIT, randomized ranks, and quantile-PIT pairs.

All randomization enters through an explicit unit-interval draw ``v`` so
that every function is pure and reproducible; callers own the RNG.
"""

from __future__ import annotations

import math

import numpy as np

from .cdf import EmpiricalCdf, LowerQuantileCdf, UpperQuantileCdf, _check_finite


def _check_unit_draw(v: float, *, half_open: bool = False) -> float:
    v = float(v)
    if half_open:
        if not (0.0 <= v < 1.0):
            raise ValueError(f"randomization draw must be in [0, 1), got {v!r}")
    elif not (0.0 <= v <= 1.0):
        raise ValueError(f"randomization draw must be in [0, 1], got {v!r}")
    return v


def pit(cdf, y: float, v: float) -> float:
    """Probability integral transform F(y-) + v (F(y) - F(y-)).

    ``cdf`` is any object with ``cdf``/``cdf_left`` methods.  For a
    continuous forecast the two limits coincide and the result is F(y),
    independent of the draw ``v``.
    """
    v = _check_unit_draw(v)
    y = _check_finite(y)
    hi = cdf.cdf(y)
    lo = cdf.cdf_left(y)
    if hi == lo:
        return hi
    return lo + v * (hi - lo)


def randomized_rank(ensemble, y: float, v: float) -> int:
    """Rank of ``y`` within an ensemble, ties broken by the draw ``v`` in [0, 1).

    Computed as 1 + floor(m * Z) where Z is the randomized PIT of the
    ensemble's empirical CDF, which equals 1 + #{x_i < y} when there are
    no ties at ``y``.
    """
    v = _check_unit_draw(v, half_open=True)
    ecdf = EmpiricalCdf(np.asarray(ensemble, dtype=float))
    z = pit(ecdf, y, v)
    return 1 + int(math.floor(ecdf.size * z))


def _randomized_eval(cdf, y: float, v: float) -> float:
    # v F(y) + (1-v) F(y-), with the convex combination skipped at
    # continuity points; this form is monotone in floating point, which
    # keeps z_u <= z_l exact at the bit level.
    hi = cdf.cdf(y)
    lo = cdf.cdf_left(y)
    if hi == lo:
        return hi
    return v * hi + (1.0 - v) * lo


def quantile_pit(levels, quantiles, y: float, v: float) -> tuple[float, float]:
    """Upper and lower quantile PIT evaluated with a shared draw ``v``.

    Returns ``(z_u, z_l)`` where z_u = v F_u(y) + (1-v) F_u(y-) and
    z_l is the same functional of the lower defective CDF; z_u <= z_l
    always holds.
    """
    v = _check_unit_draw(v)
    y = _check_finite(y)
    upper = UpperQuantileCdf(levels, quantiles)
    lower = LowerQuantileCdf(levels, quantiles)
    z_u = _randomized_eval(upper, y, v)
    z_l = _randomized_eval(lower, y, v)
    return z_u, z_l
