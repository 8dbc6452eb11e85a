"""Bandwidth allocation under percentile billing: models, solvers, oracles."""

from nba.cost import BandwidthSeries, bandwidth_series, q_percentile, total_cost
from nba.feasibility import Violation, check_feasible, is_directed_tree, prune_plan
from nba.model import (
    AllocationPlan,
    BillingConfig,
    BillingRules,
    Instance,
    Network,
    SlotDemand,
    Source,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationPlan",
    "BandwidthSeries",
    "BillingConfig",
    "BillingRules",
    "Instance",
    "Network",
    "SlotDemand",
    "Source",
    "Violation",
    "bandwidth_series",
    "check_feasible",
    "is_directed_tree",
    "prune_plan",
    "q_percentile",
    "total_cost",
]
