"""Equilibrium bidding and exchange competition for traffic-weighted auction markets."""

from .distributions import Family, OrderStatistics, ValueDistribution, monopoly_reserve
from .equilibrium import (
    BiddingFunction,
    Segment,
    SegmentForm,
    SolverOptions,
    eval_bid,
    one_sided_limits,
    regret_audit,
    solve_bidding,
    solve_segment,
)
from .game import (
    BestResponse,
    DeviationGain,
    EquilibriumResult,
    best_response,
    deviation_gain_zero_reserve,
    exchange_revenue,
    iterated_best_response,
    symmetric_instability,
    verify_fp_dominates_sp,
)
from .market import (
    ExchangeSpec,
    Kind,
    MarketConfig,
    MechanismSpec,
    cumulative_share,
    fp,
    normalize,
    sp,
)
from .revenue import (
    RevenueReport,
    myerson_benchmark,
    myerson_welfare,
    revenue_fp,
    revenue_report,
    revenue_sp,
)
from .simulation import (
    EmpiricalRegretReport,
    SimConfig,
    SimReport,
    empirical_regret,
    estimate,
    run_auction_once,
)

__version__ = "0.1.0"

__all__ = [
    "BestResponse", "BiddingFunction", "DeviationGain", "EmpiricalRegretReport",
    "EquilibriumResult", "ExchangeSpec", "Family", "Kind", "MarketConfig",
    "MechanismSpec", "OrderStatistics", "RevenueReport", "Segment", "SegmentForm",
    "SimConfig", "SimReport", "SolverOptions", "ValueDistribution",
    "best_response", "cumulative_share", "deviation_gain_zero_reserve",
    "empirical_regret", "estimate", "eval_bid", "exchange_revenue", "fp",
    "iterated_best_response", "monopoly_reserve", "myerson_benchmark",
    "myerson_welfare", "normalize", "one_sided_limits", "regret_audit",
    "revenue_fp", "revenue_report", "revenue_sp", "run_auction_once",
    "solve_bidding", "solve_segment", "sp", "symmetric_instability",
    "verify_fp_dominates_sp",
]
