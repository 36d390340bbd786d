"""E-process accumulation at an arbitrary forecast lag.

Conditional e-values pushed at steps t = 1, 2, ... are routed to residue
class k = ((t-1) mod h) + 1.  The merged evidence at step T is the average
over residues of the within-residue products,

    e_T = (1/h) sum_k prod_{l in I_k(T)} E_l,

with empty products equal to one.  For h = 1 this is the familiar test
supermartingale.  All products are accumulated in the log domain; case
studies drive e-values past 1e7 and a season of them overflows doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_LOG_TINY = -745.0  # exp underflows to zero a bit below this


def _safe_exp(x: float) -> float:
    if x == -math.inf:
        return 0.0
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class StepRecord:
    """Snapshot of the e-process after one push."""

    t: int
    e_step: float
    e_merged: float
    running_max: float
    p_value: float
    tau_statistic: float | None


class EProcess:
    """Single-writer accumulator of conditional e-values at lag ``h``.

    Parameters
    ----------
    lag : int
        Forecast lag h >= 1; pushes are distributed round-robin over h
        residue classes.
    keep_history : bool
        When true (default) per-step records are retained so the stopping
        rules can report first-crossing indices.  Monte Carlo drivers that
        only need the final state can disable it.
    """

    def __init__(self, lag: int = 1, *, keep_history: bool = True):
        if not isinstance(lag, int) or lag < 1:
            raise ValueError("lag must be an integer >= 1")
        self.lag = lag
        self.keep_history = keep_history
        self._t = 0
        self._log_prod = [0.0] * lag
        self._log_sup = [0.0] * lag  # sup over prefixes, includes the empty product
        self._log_merged = 0.0
        self._log_running_max = -math.inf
        self._records: list[StepRecord] = []
        self._log_e_history: list[float] = []
        self._log_stat_history: list[float] = []

    # ------------------------------------------------------------------
    # state updates

    def push(self, e_value: float) -> StepRecord:
        """Append one conditional e-value and return the updated snapshot."""
        e = float(e_value)
        if not (e >= 0.0) or math.isinf(e):
            raise ValueError(f"e-value must be finite and non-negative, got {e_value!r}")
        self._t += 1
        k = (self._t - 1) % self.lag
        log_e = math.log(e) if e > 0.0 else -math.inf
        self._log_prod[k] += log_e
        if self._log_prod[k] > self._log_sup[k]:
            self._log_sup[k] = self._log_prod[k]
        self._log_merged = self._log_mean(self._log_prod)
        if self._log_merged > self._log_running_max:
            self._log_running_max = self._log_merged
        log_stat = self._log_tau_statistic() if self.lag >= 2 else None
        record = StepRecord(
            t=self._t,
            e_step=e,
            e_merged=_safe_exp(self._log_merged),
            running_max=_safe_exp(self._log_running_max),
            p_value=self.anytime_p(),
            tau_statistic=None if log_stat is None else _safe_exp(log_stat),
        )
        if self.keep_history:
            self._records.append(record)
            self._log_e_history.append(self._log_merged)
            if log_stat is not None:
                self._log_stat_history.append(log_stat)
        return record

    @staticmethod
    def _log_mean(logs: list[float]) -> float:
        m = max(logs)
        if m == -math.inf:
            return -math.inf
        acc = 0.0
        for x in logs:
            d = x - m
            acc += math.exp(d) if d > _LOG_TINY else 0.0
        return m + math.log(acc / len(logs))

    def _log_tau_statistic(self) -> float:
        m = max(self._log_sup)
        acc = 0.0
        for x in self._log_sup:
            d = x - m
            acc += math.exp(d) if d > _LOG_TINY else 0.0
        return m + math.log(acc) - math.log(self.lag * math.e * math.log(self.lag))

    # ------------------------------------------------------------------
    # queries

    @property
    def t(self) -> int:
        return self._t

    @property
    def e_value(self) -> float:
        """Merged e-value after the latest push (1 before any push)."""
        return _safe_exp(self._log_merged)

    @property
    def running_max(self) -> float:
        return _safe_exp(self._log_running_max)

    @property
    def tau_statistic(self) -> float | None:
        """Scaled sum of residue suprema used by the lag-h stopping rule.

        None at lag 1, where the rescaling constant is undefined and the
        running maximum of the supermartingale is the right statistic.
        """
        if self.lag < 2:
            return None
        return _safe_exp(self._log_tau_statistic())

    @property
    def records(self) -> list[StepRecord]:
        if not self.keep_history:
            raise RuntimeError("history disabled for this EProcess")
        return list(self._records)

    def anytime_p(self) -> float:
        """Anytime-valid p-value min(1, 1/max_s e_s); 1 before any push."""
        if self._log_running_max <= 0.0:
            return 1.0
        return _safe_exp(-self._log_running_max)

    def stop_tau_alpha(self, alpha: float) -> int | None:
        """First index t with e_t >= 1/alpha over the pushed history, else None.

        Intended for lag 1, where (e_t) is a supermartingale and the
        threshold test has level alpha by Ville's inequality.
        """
        log_threshold = self._check_alpha(alpha)
        for i, log_e in enumerate(self._require_history(self._log_e_history)):
            if log_e >= log_threshold:
                return i + 1
        return None

    def stop_tau_alpha_h(self, alpha: float) -> int | None:
        """First index where the lag-h sum-of-suprema statistic crosses 1/alpha."""
        if self.lag < 2:
            raise ValueError("stop_tau_alpha_h requires lag >= 2; use stop_tau_alpha")
        log_threshold = self._check_alpha(alpha)
        for i, log_stat in enumerate(self._require_history(self._log_stat_history)):
            if log_stat >= log_threshold:
                return i + 1
        return None

    def _require_history(self, series: list[float]) -> list[float]:
        if not self.keep_history:
            raise RuntimeError("stopping rules need keep_history=True")
        return series

    @staticmethod
    def _check_alpha(alpha: float) -> float:
        alpha = float(alpha)
        if not (0.0 < alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
        return -math.log(alpha)
