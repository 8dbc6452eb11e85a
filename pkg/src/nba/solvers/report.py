from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from nba.io import plan_to_json
from nba.model import AllocationPlan, rational_to_json

PROVEN_OPTIMAL = "ProvenOptimal"
HEURISTIC = "Heuristic"
INFEASIBLE = "Infeasible"

REPORT_SCHEMA = "nba-report/1"


@dataclass(frozen=True)
class SolveReport:
    plan: AllocationPlan
    cost: Fraction | None
    status: str
    stats: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE

    def to_json(self, include_timing: bool = False) -> dict:
        """Report document; wall time only on request so output stays reproducible."""
        stats = dict(self.stats)
        if include_timing:
            stats["wall_time_s"] = round(self.wall_time, 6)
        return {
            "schema": REPORT_SCHEMA,
            "status": self.status,
            "cost": None if self.cost is None else rational_to_json(self.cost),
            "plan": plan_to_json(self.plan),
            "statistics": stats,
        }
