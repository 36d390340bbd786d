"""Monte Carlo harness: misspecified-forecast scenarios and power grids.

Observations are standard normal and forecasts are N(bias, 1 + dispersion)
(variance parameterization), so bias skews the PIT while dispersion error
bends it into U or hump shapes.  Scenarios can be transformed into PIT
values, ensemble ranks, or quantile-PIT pairs; a registry of tests maps
each of them to a rejection decision so power grids can mix e-value
methods with the fixed-sample baselines.

Everything is deterministic given the seed: each (cell, replication,
input kind) owns an independent counter-derived RNG stream, so results do
not depend on scheduling or on which tests share a replication.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .baselines import bonferroni_pair, chisquare_uniform, ks_one_sided, ks_two_sided
from .betting_continuous import BetaBettingStrategy, KernelBettingStrategy
from .betting_discrete import BetaBinomialBettingStrategy, EmpiricalBettingStrategy
from .betting_stochorder import QuantilePairBettingStrategy, StochOrderBettingStrategy
from .cdf import LowerQuantileCdf, UpperQuantileCdf
from .eprocess import EProcess
from .transforms import _randomized_eval, randomized_rank

DEFAULT_SEED = 1729
GRID_DEFAULT = tuple(np.round(np.linspace(-0.5, 0.5, 11), 10))

_KIND_IDS = {"pit": 0, "ensemble": 1, "quantile": 2}


@dataclass(frozen=True)
class Scenario:
    """One forecast-misspecification configuration."""

    bias: float = 0.0
    dispersion: float = 0.0
    kind: str = "pit"
    n: int = 360
    seed: int | tuple[int, ...] = DEFAULT_SEED
    ensemble_size: int = 20
    n_levels: int = 19
    levels: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in _KIND_IDS:
            raise ValueError(f"kind must be one of {tuple(_KIND_IDS)}")
        if not self.dispersion > -1.0:
            raise ValueError("dispersion must exceed -1 (forecast variance positive)")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "ensemble" and self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if self.kind == "quantile" and self.levels is None and self.n_levels < 1:
            raise ValueError("n_levels must be >= 1")


def generate(scenario: Scenario) -> np.ndarray:
    """Calibration values for a scenario: PIT, ranks, or quantile-PIT pairs.

    Returns a float array of shape (n,) for ``kind="pit"``, an int array
    of ranks in 1..m+1 for ``kind="ensemble"``, and an (n, 2) float array
    of (upper, lower) pairs for ``kind="quantile"``.
    """
    rng = np.random.default_rng(scenario.seed)
    sd = math.sqrt(1.0 + scenario.dispersion)
    y = rng.standard_normal(scenario.n)
    if scenario.kind == "pit":
        return ndtr((y - scenario.bias) / sd)
    if scenario.kind == "ensemble":
        m = scenario.ensemble_size
        members = scenario.bias + sd * rng.standard_normal((scenario.n, m))
        draws = rng.random(scenario.n)
        return np.array(
            [randomized_rank(members[i], y[i], draws[i]) for i in range(scenario.n)],
            dtype=int,
        )
    levels = (
        np.asarray(scenario.levels, dtype=float)
        if scenario.levels is not None
        else np.arange(1, scenario.n_levels + 1) / (scenario.n_levels + 1)
    )
    quantiles = scenario.bias + sd * ndtri(levels)
    upper = UpperQuantileCdf(levels, quantiles)
    lower = LowerQuantileCdf(levels, quantiles)
    draws = rng.random(scenario.n)
    out = np.empty((scenario.n, 2))
    for i in range(scenario.n):
        out[i, 0] = _randomized_eval(upper, y[i], draws[i])
        out[i, 1] = _randomized_eval(lower, y[i], draws[i])
    return out


def unfocused_scenario(n: int, seed) -> np.ndarray:
    """PIT of the unfocused forecast: a mixture forecast with a random shift.

    The outcome follows a Gaussian random walk and the forecast mixes the
    correct one-step-ahead distribution with a copy shifted by +-1.  The
    resulting PIT sequence is uniform at lag 1 even though the forecast
    never matches the true conditional distribution.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    increments = rng.standard_normal(n)  # Y_{t+1} - Y_t
    eta = rng.choice([-1.0, 1.0], size=n)
    return 0.5 * (ndtr(increments) + ndtr(increments - eta))


# ----------------------------------------------------------------------
# test registry


@dataclass(frozen=True)
class TestDefinition:
    name: str
    kind: str
    family: str  # "evalue" or "fixed"
    run: Callable = field(repr=False)


def _evalue_reject(strategy, values, alpha: float, lag: int) -> bool:
    threshold = 1.0 / alpha
    process = EProcess(lag=lag, keep_history=False)
    for value in values:
        process.push(strategy.step(value))
        statistic = process.running_max if lag == 1 else process.tau_statistic
        if statistic >= threshold:
            return True
    return False


def _make_evalue_test(name: str, kind: str, builder) -> TestDefinition:
    def run(values, alpha: float, lag: int, context: dict) -> bool:
        return _evalue_reject(builder(lag, context), values, alpha, lag)

    return TestDefinition(name=name, kind=kind, family="evalue", run=run)


def _make_fixed_test(name: str, kind: str, p_value) -> TestDefinition:
    def run(values, alpha: float, lag: int, context: dict) -> bool:
        return p_value(values, context) <= alpha

    return TestDefinition(name=name, kind=kind, family="fixed", run=run)


def _rank_counts(ranks, categories: int) -> np.ndarray:
    return np.bincount(np.asarray(ranks, dtype=int), minlength=categories + 1)[1:]


def _quantile_bonferroni(pairs, context) -> float:
    p_upper = ks_one_sided(pairs[:, 0], direction="less").p_value
    p_lower = ks_one_sided(pairs[:, 1], direction="greater").p_value
    return bonferroni_pair(p_upper, p_lower)


TEST_REGISTRY: dict[str, TestDefinition] = {}


def _register(defn: TestDefinition) -> None:
    TEST_REGISTRY[defn.name] = defn


_register(_make_evalue_test("beta", "pit", lambda lag, ctx: BetaBettingStrategy(lag=lag)))
_register(_make_evalue_test("kernel", "pit", lambda lag, ctx: KernelBettingStrategy(lag=lag)))
_register(
    _make_evalue_test(
        "grenander",
        "pit",
        lambda lag, ctx: StochOrderBettingStrategy(lag=lag, null="st-mirror", estimator="grenander"),
    )
)
_register(
    _make_evalue_test(
        "bernstein",
        "pit",
        lambda lag, ctx: StochOrderBettingStrategy(lag=lag, null="st-mirror", estimator="bernstein"),
    )
)
_register(
    _make_evalue_test(
        "betabinomial",
        "ensemble",
        lambda lag, ctx: BetaBinomialBettingStrategy(ctx["categories"], lag=lag),
    )
)
_register(
    _make_evalue_test(
        "empirical",
        "ensemble",
        lambda lag, ctx: EmpiricalBettingStrategy(ctx["categories"], lag=lag),
    )
)
_register(
    _make_evalue_test(
        "quantile-grenander",
        "quantile",
        lambda lag, ctx: QuantilePairBettingStrategy(lag=lag, estimator="grenander"),
    )
)
_register(
    _make_evalue_test(
        "quantile-bernstein",
        "quantile",
        lambda lag, ctx: QuantilePairBettingStrategy(lag=lag, estimator="bernstein"),
    )
)
TEST_REGISTRY["quantile-pair"] = TestDefinition(
    name="quantile-pair",
    kind="quantile",
    family="evalue",
    run=TEST_REGISTRY["quantile-grenander"].run,
)
_register(_make_fixed_test("ks", "pit", lambda z, ctx: ks_two_sided(z).p_value))
_register(
    _make_fixed_test("ks-greater", "pit", lambda z, ctx: ks_one_sided(z, "greater").p_value)
)
_register(
    _make_fixed_test(
        "chisq",
        "ensemble",
        lambda r, ctx: chisquare_uniform(_rank_counts(r, ctx["categories"])).p_value,
    )
)
_register(_make_fixed_test("ks-bonferroni", "quantile", _quantile_bonferroni))


# ----------------------------------------------------------------------
# power grids


@dataclass(frozen=True)
class PowerGrid:
    """Rejection-rate matrix over (bias, dispersion) cells for a set of tests."""

    eps_values: tuple[float, ...]
    delta_values: tuple[float, ...]
    tests: tuple[str, ...]
    rates: np.ndarray = field(repr=False)
    n: int
    alpha: float
    reps: int
    lag: int
    seed: int

    def rate(self, eps: float, delta: float, test: str) -> float:
        i = self.eps_values.index(eps)
        j = self.delta_values.index(delta)
        k = self.tests.index(test)
        return float(self.rates[i, j, k])

    def to_rows(self):
        for i, eps in enumerate(self.eps_values):
            for j, delta in enumerate(self.delta_values):
                for k, test in enumerate(self.tests):
                    yield eps, delta, test, self.n, self.alpha, self.reps, float(
                        self.rates[i, j, k]
                    )


def _chunk_payload(args):
    (seed, cell_index, rep_range, eps, delta, n, alpha, lag, tests, ensemble_size, n_levels) = args
    defs = [TEST_REGISTRY[t] for t in tests]
    kinds = sorted({d.kind for d in defs}, key=_KIND_IDS.get)
    context = {"categories": ensemble_size + 1}
    counts = np.zeros(len(defs), dtype=int)
    for rep in rep_range:
        values = {}
        for kind in kinds:
            scenario = Scenario(
                bias=eps,
                dispersion=delta,
                kind=kind,
                n=n,
                seed=(seed, cell_index, _KIND_IDS[kind], rep),
                ensemble_size=ensemble_size,
                n_levels=n_levels,
            )
            values[kind] = generate(scenario)
        for t_idx, defn in enumerate(defs):
            if defn.run(values[defn.kind], alpha, lag, context):
                counts[t_idx] += 1
    return counts


def run_power_grid(
    tests,
    eps_values=GRID_DEFAULT,
    delta_values=GRID_DEFAULT,
    n: int = 360,
    alpha: float = 0.05,
    reps: int = 500,
    lag: int = 1,
    seed: int = DEFAULT_SEED,
    ensemble_size: int = 20,
    n_levels: int = 19,
    jobs: int = 1,
) -> PowerGrid:
    """Rejection rates of the named tests over a (bias, dispersion) grid.

    E-value tests reject when their stopping statistic (running maximum
    of the merged e-process at lag 1, the rescaled sum of residue suprema
    at higher lags) reaches 1/alpha at any step; fixed tests reject when
    their full-sample p-value is at most alpha.  Replications are
    independent and seeded by counters, so identical inputs give
    identical grids regardless of ``jobs``.
    """
    tests = list(tests)
    unknown = [t for t in tests if t not in TEST_REGISTRY]
    if unknown:
        raise ValueError(f"unknown tests: {unknown}; known: {sorted(TEST_REGISTRY)}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    eps_values = tuple(float(e) for e in eps_values)
    delta_values = tuple(float(d) for d in delta_values)
    cells = [(i, j) for i in range(len(eps_values)) for j in range(len(delta_values))]
    jobs = max(1, int(jobs))
    chunk = reps if jobs == 1 else max(1, math.ceil(reps / (jobs * 4)))
    tasks = []
    for cell_index, (i, j) in enumerate(cells):
        for start in range(0, reps, chunk):
            rep_range = range(start, min(start + chunk, reps))
            tasks.append(
                (
                    seed,
                    cell_index,
                    rep_range,
                    eps_values[i],
                    delta_values[j],
                    n,
                    alpha,
                    lag,
                    tuple(tests),
                    ensemble_size,
                    n_levels,
                )
            )
    if jobs == 1:
        results = [_chunk_payload(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_chunk_payload, tasks))
    rates = np.zeros((len(eps_values), len(delta_values), len(tests)))
    for task, counts in zip(tasks, results):
        cell_index = task[1]
        i, j = cells[cell_index]
        rates[i, j, :] += counts
    rates /= reps
    return PowerGrid(
        eps_values=eps_values,
        delta_values=delta_values,
        tests=tuple(tests),
        rates=rates,
        n=n,
        alpha=alpha,
        reps=reps,
        lag=lag,
        seed=seed,
    )
