"""Monte Carlo and closed-form analytics for constant-product market making.

The package measures what a passive liquidity position loses to price
discovery: the endpoint (holding) loss, the path-accumulated rebalancing
loss, the arbitrage volume that carries both, and how a proportional fee
reshapes them.  Everything is seed-reproducible down to the individual run.
"""

from .analytics import (
    BarrierSpec,
    Branch,
    FirstPassageResult,
    ILDistParams,
    IlTable,
    StepKind,
    analytic_il_mean,
    build_il_table,
    clt_sum_experiment,
    expected_il_gbm,
    expected_il_quadrature,
    expected_lvr,
    expected_lvr_gbm,
    first_passage,
    gof_chi_square,
    il_pdf,
    invert_il,
    lvr_ode_rhs,
    sample_il,
)
from .cfmm import Pool, hodl_value, position_value, reserves_at_price, swap_to_price
from .engine import (
    ArbEvent,
    ArbitrageConfig,
    BandRule,
    EngineMode,
    TradeTarget,
    WaitStats,
    arb_wait_statistics,
    no_trade_band,
    run_no_fee,
    run_with_fees,
    trade_target,
)
from .errors import ConfigError, NumericalError, ResourceLimitError
from .harness import (
    CampaignResult,
    ExperimentConfig,
    Observables,
    RegimeLabel,
    classify_regime,
    run_campaign,
    simulate_price_matrix,
    sweep_fee,
    sweep_volume_vs_sigma,
    sweep_volume_vs_steps,
)
from .metrics import (
    RunMetrics,
    accumulate,
    il_between,
    lvr_step,
    rebalance_quantities,
    volume_step,
)
from .presets import PRESETS, get_preset, preset_names
from .stats import Histogram, fit_loglog, mean_stderr, sample_skewness
from .stochastic import (
    PricePath,
    PriceProcessSpec,
    ProcessKind,
    derive_run_seed,
    generate_path,
    make_generator,
    pdf_bm,
    pdf_gbm,
    step_bm,
    step_gbm,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # pool mechanics
    "Pool", "reserves_at_price", "position_value", "hodl_value", "swap_to_price",
    # price processes
    "ProcessKind", "PriceProcessSpec", "PricePath", "generate_path",
    "make_generator", "derive_run_seed", "pdf_bm", "pdf_gbm",
    "step_bm", "step_gbm",
    # per-path metrics
    "RunMetrics", "il_between", "lvr_step", "rebalance_quantities",
    "volume_step", "accumulate",
    # arbitrage engine
    "EngineMode", "BandRule", "TradeTarget", "ArbitrageConfig", "ArbEvent",
    "WaitStats", "no_trade_band", "trade_target", "run_no_fee",
    "run_with_fees", "arb_wait_statistics",
    # analytics
    "ILDistParams", "Branch", "StepKind", "BarrierSpec", "FirstPassageResult",
    "IlTable", "expected_lvr", "expected_lvr_gbm", "expected_il_gbm",
    "expected_il_quadrature", "invert_il", "il_pdf", "build_il_table",
    "analytic_il_mean", "sample_il", "clt_sum_experiment", "first_passage",
    "lvr_ode_rhs", "gof_chi_square",
    # campaigns
    "ExperimentConfig", "CampaignResult", "Observables", "RegimeLabel",
    "classify_regime", "run_campaign", "simulate_price_matrix",
    "sweep_fee", "sweep_volume_vs_sigma", "sweep_volume_vs_steps",
    # presets and plumbing
    "PRESETS", "get_preset", "preset_names",
    "Histogram", "mean_stderr", "sample_skewness", "fit_loglog",
    "ConfigError", "ResourceLimitError", "NumericalError",
]
