import numpy as np
import pytest

from calmon import Scenario, generate, run_power_grid, unfocused_scenario
from calmon.simulate import TEST_REGISTRY


def ks_distance_from_uniform(z):
    z = np.sort(z)
    n = z.size
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return max(np.max(hi - z), np.max(z - lo))


class TestGenerate:
    def test_null_pit_uniform(self):
        z = generate(Scenario(kind="pit", n=100_000, seed=1))
        assert ks_distance_from_uniform(z) < 0.01

    def test_biased_pit_shifted(self):
        z = generate(Scenario(bias=0.5, kind="pit", n=50_000, seed=2))
        # PIT of an upward-biased forecast is stochastically smaller than
        # uniform, so its mean falls below one half
        assert z.mean() < 0.45

    def test_quantile_gap_constant(self):
        pairs = generate(Scenario(kind="quantile", n=2000, seed=3, n_levels=19))
        gaps = pairs[:, 1] - pairs[:, 0]
        assert np.all(np.abs(gaps - 0.05) <= 5e-16)
        assert np.all(pairs[:, 0] >= 0) and np.all(pairs[:, 1] <= 1)

    def test_ranks_in_range(self):
        ranks = generate(Scenario(kind="ensemble", n=5000, seed=4, ensemble_size=20))
        assert ranks.min() >= 1 and ranks.max() <= 21
        # uniform over 21 categories under the null
        counts = np.bincount(ranks, minlength=22)[1:]
        assert abs(counts.mean() - 5000 / 21) < 1e-9

    def test_determinism(self):
        a = generate(Scenario(kind="ensemble", n=500, seed=42))
        b = generate(Scenario(kind="ensemble", n=500, seed=42))
        assert np.array_equal(a, b)
        c = generate(Scenario(kind="ensemble", n=500, seed=43))
        assert not np.array_equal(a, c)

    def test_dispersion_validated(self):
        with pytest.raises(ValueError):
            Scenario(dispersion=-1.0)

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            Scenario(kind="histogram")


class TestUnfocused:
    def test_lag1_uniform(self):
        z = unfocused_scenario(100_000, seed=5)
        assert ks_distance_from_uniform(z) < 0.01

    def test_degenerates_to_ideal_forecast(self):
        # with the random shift removed the PIT is the exact normal CDF
        rng = np.random.default_rng(6)
        increments = rng.standard_normal(50_000)
        from scipy.special import ndtr

        z = ndtr(increments)
        assert ks_distance_from_uniform(z) < 0.01

    def test_deterministic(self):
        assert np.array_equal(unfocused_scenario(100, 7), unfocused_scenario(100, 7))


class TestPowerGrid:
    def test_registry_names(self):
        expected = {
            "beta",
            "kernel",
            "betabinomial",
            "empirical",
            "grenander",
            "bernstein",
            "quantile-grenander",
            "quantile-bernstein",
            "quantile-pair",
            "ks",
            "ks-greater",
            "chisq",
            "ks-bonferroni",
        }
        assert expected <= set(TEST_REGISTRY)

    def test_unknown_test_rejected(self):
        with pytest.raises(ValueError):
            run_power_grid(["anderson"], eps_values=[0.0], delta_values=[0.0], reps=1)

    def test_single_cell_single_rep(self):
        grid = run_power_grid(["ks"], eps_values=[0.0], delta_values=[0.0], reps=1, seed=1)
        assert grid.rates[0, 0, 0] in (0.0, 1.0)

    def test_row_count(self):
        grid = run_power_grid(
            ["ks", "chisq"],
            eps_values=[-0.1, 0.0],
            delta_values=[0.0, 0.1, 0.2],
            reps=2,
            seed=1,
        )
        rows = list(grid.to_rows())
        assert len(rows) == 2 * 3 * 2

    def test_jobs_do_not_change_result(self):
        kwargs = dict(
            eps_values=[0.0, 0.3],
            delta_values=[0.0],
            reps=40,
            seed=11,
            n=120,
        )
        serial = run_power_grid(["beta", "ks"], jobs=1, **kwargs)
        parallel = run_power_grid(["beta", "ks"], jobs=2, **kwargs)
        assert np.array_equal(serial.rates, parallel.rates)

    def test_null_validity_quantile_tests(self):
        grid = run_power_grid(
            ["ks-bonferroni", "quantile-bernstein"],
            eps_values=[0.0],
            delta_values=[0.0],
            reps=400,
            seed=13,
            jobs=2,
        )
        bound = 0.05 + 2 * np.sqrt(0.05 * 0.95 / 400)
        assert grid.rate(0.0, 0.0, "ks-bonferroni") <= bound
        assert grid.rate(0.0, 0.0, "quantile-bernstein") <= bound

    def test_monotone_power_in_bias(self):
        grid = run_power_grid(
            ["beta"],
            eps_values=[0.0, 0.25, 0.5],
            delta_values=[0.0],
            reps=120,
            seed=12,
            jobs=2,
        )
        rates = grid.rates[:, 0, 0]
        slack = 2 * np.sqrt(0.25 / 120)
        assert rates[1] >= rates[0] - slack
        assert rates[2] >= rates[1] - slack
