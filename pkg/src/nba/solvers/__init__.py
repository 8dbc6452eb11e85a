"""Exact and heuristic solvers for the generic model."""

from nba.solvers.exact import ExactLimits, solve_exact
from nba.solvers.greedy import solve_greedy
from nba.solvers.local import improve_local
from nba.solvers.report import HEURISTIC, INFEASIBLE, PROVEN_OPTIMAL, SolveReport

__all__ = [
    "ExactLimits",
    "HEURISTIC",
    "INFEASIBLE",
    "PROVEN_OPTIMAL",
    "SolveReport",
    "improve_local",
    "solve_exact",
    "solve_greedy",
]
