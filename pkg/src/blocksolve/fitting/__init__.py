"""Derivative-free bound-constrained nonlinear least-squares fitting."""

from .families import make_problem
from .problem import EvaluationRecord, FitResult, ResidualProblem, chi2
from .solver import SolverOptions, pounder_minimize, pounders_minimize, warm_start

__all__ = [
    "EvaluationRecord",
    "FitResult",
    "ResidualProblem",
    "SolverOptions",
    "chi2",
    "make_problem",
    "pounder_minimize",
    "pounders_minimize",
    "warm_start",
]
