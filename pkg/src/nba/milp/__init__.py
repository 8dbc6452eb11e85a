"""MILP encoding, LP/MPS export and a small exact solver for it."""

from nba.milp.bnb import INFEASIBLE, OPTIMAL, UNSOLVED, MilpResult, plan_from_values, solve_milp_internal
from nba.milp.encoder import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, Constraint, MilpModel, PeakGroup, Variable, encode
from nba.milp.export import export_lp, export_mps, format_number

__all__ = [
    "BINARY",
    "CONTINUOUS",
    "Constraint",
    "EQ",
    "GE",
    "INFEASIBLE",
    "INTEGER",
    "LE",
    "MilpModel",
    "MilpResult",
    "OPTIMAL",
    "PeakGroup",
    "UNSOLVED",
    "Variable",
    "encode",
    "export_lp",
    "export_mps",
    "format_number",
    "plan_from_values",
    "solve_milp_internal",
]
