"""Buy-many pricing workbench.

Subsets of items ``0..n-1`` are Python ints used as bitsets throughout.
"""
from .coretail import decomposition_report, split_core_tail
from .demand import (
    DemandResult,
    ExplicitDemand,
    ProductMarginals,
    best_response,
    demand_distribution,
    revenue,
    singleminded_from_demand,
)
from .lattice import (
    DEFAULT_TOL,
    Additive,
    BundlePricing,
    CoverClosure,
    ExplicitPricing,
    ExplicitValuation,
    ItemPricing,
    Pricing,
    ScaledPricing,
    SingleMinded,
    ToleranceConfig,
    UnitDemand,
    Valuation,
    ValuationDistribution,
    additive_extension,
    buy_many_closure,
    check_deterministic_sybil_proof,
    items_of,
    mask_of,
)
from .lottery import (
    Lottery,
    LotteryMenu,
    adaptive_acquisition_cost,
    dominates,
    lottery_item_floor,
    multiset_bundle_utility,
)
from .lowerbound import (
    approx_from_below_ratio,
    build_additive_instance,
    build_singleminded_instance,
    gap_report,
    matroid_rank,
)
from .scaling import (
    ScaleDistribution,
    combined_bound_check,
    expected_scaled_revenue,
    pointwise_factor,
    scaled_bound_check,
)
from .simple_opt import brev_exact, srev_exact_singleminded, srev_grid

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "Additive",
    "BundlePricing",
    "CoverClosure",
    "DemandResult",
    "ExplicitDemand",
    "ExplicitPricing",
    "ExplicitValuation",
    "ItemPricing",
    "Lottery",
    "LotteryMenu",
    "Pricing",
    "ProductMarginals",
    "ScaleDistribution",
    "ScaledPricing",
    "SingleMinded",
    "ToleranceConfig",
    "UnitDemand",
    "Valuation",
    "ValuationDistribution",
    "adaptive_acquisition_cost",
    "additive_extension",
    "approx_from_below_ratio",
    "best_response",
    "brev_exact",
    "build_additive_instance",
    "build_singleminded_instance",
    "buy_many_closure",
    "check_deterministic_sybil_proof",
    "combined_bound_check",
    "decomposition_report",
    "demand_distribution",
    "dominates",
    "expected_scaled_revenue",
    "gap_report",
    "items_of",
    "lottery_item_floor",
    "mask_of",
    "matroid_rank",
    "multiset_bundle_utility",
    "pointwise_factor",
    "revenue",
    "scaled_bound_check",
    "singleminded_from_demand",
    "split_core_tail",
    "srev_exact_singleminded",
    "srev_grid",
]
