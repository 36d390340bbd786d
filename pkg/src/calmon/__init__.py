"""Sequential forecast-calibration testing with anytime-valid e-values."""

from .baselines import (
    TestResult,
    bonferroni_pair,
    chisquare_uniform,
    ks_one_sided,
    ks_two_sided,
)
from .betting_continuous import (
    BetaBettingStrategy,
    KernelBettingStrategy,
    beta_betting_stream,
    beta_evalue,
    fit_beta_mle,
    kernel_betting_stream,
)
from .betting_discrete import (
    BetaBinomialBettingStrategy,
    EmpiricalBettingStrategy,
    betabinomial_betting_stream,
    betabinomial_pmf,
    empirical_betting_stream,
    fit_betabinomial_mle,
)
from .betting_stochorder import (
    QuantilePairBettingStrategy,
    StochOrderBettingStrategy,
    quantile_calibration_stream,
    stoch_order_betting_stream,
)
from .cdf import (
    CensoredLogisticCdf,
    EmpiricalCdf,
    GaussianCdf,
    LowerQuantileCdf,
    TruncatedLogisticCdf,
    UpperQuantileCdf,
)
from .eprocess import EProcess, StepRecord
from .errors import BandwidthError, InsufficientDataError
from .monotone import (
    BetaMixtureDensity,
    StepDensity,
    bernstein_fit,
    discretize_density,
    grenander_fit,
)
from .simulate import (
    DEFAULT_SEED,
    PowerGrid,
    Scenario,
    TEST_REGISTRY,
    generate,
    run_power_grid,
    unfocused_scenario,
)
from .transforms import pit, quantile_pit, randomized_rank

__version__ = "0.1.0"

__all__ = [
    "BandwidthError",
    "BetaBettingStrategy",
    "BetaBinomialBettingStrategy",
    "BetaMixtureDensity",
    "CensoredLogisticCdf",
    "DEFAULT_SEED",
    "EProcess",
    "EmpiricalBettingStrategy",
    "EmpiricalCdf",
    "GaussianCdf",
    "InsufficientDataError",
    "KernelBettingStrategy",
    "LowerQuantileCdf",
    "PowerGrid",
    "QuantilePairBettingStrategy",
    "Scenario",
    "StepDensity",
    "StepRecord",
    "StochOrderBettingStrategy",
    "TEST_REGISTRY",
    "TestResult",
    "TruncatedLogisticCdf",
    "UpperQuantileCdf",
    "beta_betting_stream",
    "beta_evalue",
    "betabinomial_betting_stream",
    "betabinomial_pmf",
    "bernstein_fit",
    "bonferroni_pair",
    "chisquare_uniform",
    "discretize_density",
    "empirical_betting_stream",
    "fit_beta_mle",
    "fit_betabinomial_mle",
    "generate",
    "grenander_fit",
    "kernel_betting_stream",
    "ks_one_sided",
    "ks_two_sided",
    "pit",
    "quantile_calibration_stream",
    "quantile_pit",
    "randomized_rank",
    "run_power_grid",
    "stoch_order_betting_stream",
    "unfocused_scenario",
]
