import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from calmon import EProcess


def brute_force_merged(e_values, lag):
    """Direct evaluation of the residue-averaged product by index-set enumeration."""
    t = len(e_values)
    total = 0.0
    for k in range(1, lag + 1):
        prod = 1.0
        for s in range(0, (t - k) // lag + 1):
            idx = k + lag * s
            if idx <= t:
                prod *= e_values[idx - 1]
        total += prod
    return total / lag


def brute_force_tau_statistic(e_values, lag):
    t = len(e_values)
    total = 0.0
    for k in range(1, lag + 1):
        best = 1.0  # empty product
        prod = 1.0
        for s in range(0, (t - k) // lag + 1):
            idx = k + lag * s
            if idx <= t:
                prod *= e_values[idx - 1]
                best = max(best, prod)
        total += best
    return total / (lag * math.e * math.log(lag))


class TestPush:
    def test_lag2_example(self):
        ep = EProcess(lag=2)
        for e in (2, 1, 2, 1, 2):
            rec = ep.push(e)
        assert rec.e_merged == pytest.approx(4.5, rel=1e-12)

    def test_all_ones_identity(self):
        ep = EProcess(lag=3)
        for _ in range(4):
            rec = ep.push(1.0)
        assert rec.e_merged == pytest.approx(1.0, rel=1e-12)

    def test_lag1_product_and_p(self):
        ep = EProcess(lag=1)
        ep.push(2.0)
        rec = ep.push(3.0)
        assert rec.e_merged == pytest.approx(6.0, rel=1e-12)
        assert rec.p_value == pytest.approx(1 / 6, rel=1e-12)

    def test_rejects_bad_values(self):
        ep = EProcess()
        with pytest.raises(ValueError):
            ep.push(-0.1)
        with pytest.raises(ValueError):
            ep.push(math.nan)
        with pytest.raises(ValueError):
            ep.push(math.inf)

    def test_zero_push_is_legal_and_recoverable(self):
        ep = EProcess(lag=2)
        ep.push(0.0)
        rec = ep.push(4.0)
        # one residue is dead, the other carries the evidence
        assert rec.e_merged == pytest.approx(2.0, rel=1e-12)

    def test_overflow_safe(self):
        ep = EProcess(lag=1)
        for _ in range(50):
            rec = ep.push(1e12)
        assert rec.e_merged == math.inf
        assert ep.anytime_p() == 0.0

    @given(
        es=st.lists(st.floats(0.0, 5.0, allow_nan=False), min_size=1, max_size=12),
        lag=st.integers(1, 4),
    )
    @settings(max_examples=400, deadline=None)
    def test_merged_matches_brute_force(self, es, lag):
        ep = EProcess(lag=lag)
        for e in es:
            rec = ep.push(e)
        expected = brute_force_merged(es, lag)
        if expected == 0.0:
            assert rec.e_merged == 0.0
        else:
            assert rec.e_merged == pytest.approx(expected, rel=1e-12)

    @given(
        es=st.lists(st.floats(0.0, 5.0, allow_nan=False), min_size=1, max_size=12),
        lag=st.integers(2, 4),
    )
    @settings(max_examples=300, deadline=None)
    def test_tau_statistic_matches_brute_force(self, es, lag):
        ep = EProcess(lag=lag)
        for e in es:
            rec = ep.push(e)
        assert rec.tau_statistic == pytest.approx(
            brute_force_tau_statistic(es, lag), rel=1e-12
        )

    @given(es=st.lists(st.floats(0.0, 3.0, allow_nan=False), min_size=1, max_size=30))
    @settings(max_examples=200, deadline=None)
    def test_monotonicity(self, es):
        ep = EProcess(lag=1)
        last_p, last_max = 1.0, 0.0
        for e in es:
            rec = ep.push(e)
            assert rec.p_value <= last_p + 1e-15
            assert rec.running_max >= last_max - 1e-15
            last_p, last_max = rec.p_value, rec.running_max


class TestStopping:
    def test_tau_alpha_crossing(self):
        ep = EProcess(lag=1)
        for e in (3, 3, 3):
            ep.push(e)
        assert ep.stop_tau_alpha(0.05) == 3

    def test_tau_alpha_no_crossing(self):
        ep = EProcess(lag=1)
        for _ in range(10):
            ep.push(1.0)
        assert ep.stop_tau_alpha(0.05) is None

    def test_tau_alpha_single_push(self):
        ep = EProcess(lag=1)
        ep.push(25.0)
        assert ep.stop_tau_alpha(0.05) == 1

    def test_tau_alpha_validates(self):
        ep = EProcess(lag=1)
        with pytest.raises(ValueError):
            ep.stop_tau_alpha(0.0)
        with pytest.raises(ValueError):
            ep.stop_tau_alpha(1.0)

    def test_tau_alpha_h_statistic_example(self):
        ep = EProcess(lag=2)
        for e in (2, 1, 2, 1, 2):
            rec = ep.push(e)
        # 9 / (2 e ln 2), frozen from a high-precision evaluation
        assert rec.tau_statistic == pytest.approx(2.3883203044, abs=1e-9)

    def test_tau_alpha_h_all_ones_never_stops(self):
        ep = EProcess(lag=2)
        for _ in range(100):
            rec = ep.push(1.0)
        assert rec.tau_statistic == pytest.approx(0.530737845423, abs=1e-9)
        assert ep.stop_tau_alpha_h(0.5) is None

    def test_tau_alpha_h_crossing(self):
        ep = EProcess(lag=2)
        ep.push(50.0)
        ep.push(50.0)
        assert ep.tau_statistic == pytest.approx(26.5368922712, abs=1e-9)
        assert ep.stop_tau_alpha_h(0.05) == 2

    def test_tau_alpha_h_requires_lag2(self):
        ep = EProcess(lag=1)
        ep.push(2.0)
        with pytest.raises(ValueError):
            ep.stop_tau_alpha_h(0.05)
        assert ep.tau_statistic is None


class TestAnytimeP:
    def test_one_before_pushes(self):
        assert EProcess().anytime_p() == 1.0

    def test_reciprocal_running_max(self):
        ep = EProcess(lag=1)
        ep.push(4.0)
        ep.push(0.5)
        assert ep.anytime_p() == pytest.approx(0.25, rel=1e-12)

    def test_capped_at_one(self):
        ep = EProcess(lag=1)
        ep.push(0.5)
        assert ep.anytime_p() == 1.0


class TestRecords:
    def test_record_fields(self):
        ep = EProcess(lag=2)
        ep.push(2.0)
        recs = ep.records
        assert recs[0].t == 1
        assert recs[0].e_step == 2.0
        assert recs[0].tau_statistic is not None

    def test_history_disabled(self):
        ep = EProcess(lag=1, keep_history=False)
        ep.push(2.0)
        with pytest.raises(RuntimeError):
            ep.records
        with pytest.raises(RuntimeError):
            ep.stop_tau_alpha(0.05)
        assert ep.running_max == 2.0
