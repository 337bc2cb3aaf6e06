"""Combinatorial clock auction simulator with exact rational arithmetic."""
from __future__ import annotations

from .allocation import (
    Allocation,
    Assignment,
    OptResult,
    OptUnknown,
    greedy_general,
    greedy_unit,
    optimal_welfare,
    value_buckets,
    winner_determination,
)
from .mechanism import (
    AuctionConfig,
    AuctionResult,
    AuctionTrace,
    AuctionTruncated,
    IncrementPolicy,
    run_cca,
)
from .model import (
    Additive,
    Bid,
    BundleEntry,
    BundleList,
    InputError,
    Instance,
    TieBreakRule,
    UnitDemand,
    demand_query,
)

__version__ = "0.1.0"

__all__ = [
    "Additive",
    "Allocation",
    "Assignment",
    "AuctionConfig",
    "AuctionResult",
    "AuctionTrace",
    "AuctionTruncated",
    "Bid",
    "BundleEntry",
    "BundleList",
    "IncrementPolicy",
    "InputError",
    "Instance",
    "OptResult",
    "OptUnknown",
    "TieBreakRule",
    "UnitDemand",
    "demand_query",
    "greedy_general",
    "greedy_unit",
    "optimal_welfare",
    "run_cca",
    "value_buckets",
    "winner_determination",
]
