"""Independent ground truth: enumeration, tree DP and LP relaxations."""
from .brute import BudgetExceededError, brute_force_min, evaluate_many, labelings, tree_dp_min
from .lp import KINDS, LinearProgram, build_relaxation, pbf_relaxation
from .simplex import LPInfeasible, LPUnbounded, highs_solve, simplex_solve, solve_lp

__all__ = [
    "BudgetExceededError", "brute_force_min", "evaluate_many", "labelings", "tree_dp_min",
    "KINDS", "LinearProgram", "build_relaxation", "pbf_relaxation",
    "LPInfeasible", "LPUnbounded", "highs_solve", "simplex_solve", "solve_lp",
]
