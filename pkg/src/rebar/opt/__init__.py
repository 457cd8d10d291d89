"""LP and MILP solvers over :class:`MilpModel`."""

from .bnb import solve_milp
from .lptext import to_lp_text
from .model import Constraint, MilpModel, Sense, SolveResult, SolveStats, Status
from .simplex import solve_arrays, solve_lp

__all__ = [
    "Constraint", "MilpModel", "Sense", "SolveResult", "SolveStats", "Status",
    "solve_arrays", "solve_lp", "solve_milp", "to_lp_text",
]
