"""Weighted least-squares problem container and evaluation records."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import ConfigError, EvaluatorError


@dataclass
class ResidualProblem:
    """Data misfit problem: minimize sum_i ((d_i - s_i(x)) / sigma_i)^2 over l <= x <= u.

    ``evaluator`` maps a parameter vector to the vector of simulated
    observables s(x); it may be noisy, and it is the only thing the solver
    is allowed to call.
    """

    n: int
    o: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    data: np.ndarray
    sigma: np.ndarray
    lower: np.ndarray = None
    upper: np.ndarray = None
    name: str = ""

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.lower is None:
            self.lower = np.full(self.n, -np.inf)
        if self.upper is None:
            self.upper = np.full(self.n, np.inf)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.data.shape != (self.o,) or self.sigma.shape != (self.o,):
            raise ConfigError("data and sigma must have length o")
        if self.lower.shape != (self.n,) or self.upper.shape != (self.n,):
            raise ConfigError("bounds must have length n")
        if np.any(self.sigma <= 0):
            raise ConfigError("sigma entries must be positive")
        if np.any(self.lower > self.upper):
            raise ConfigError("need lower <= upper componentwise")

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        try:
            s = np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)
        except Exception as exc:  # noqa: BLE001 - black box may raise anything
            raise EvaluatorError(x, exc) from exc
        if s.shape != (self.o,):
            raise EvaluatorError(x, f"evaluator returned shape {s.shape}, expected ({self.o},)")
        return (self.data - s) / self.sigma


def chi2(problem: ResidualProblem, x) -> tuple[float, np.ndarray]:
    """Objective value and residual vector at x; exactly one evaluator call."""
    x = np.asarray(x, dtype=float)
    if np.any(x < problem.lower) or np.any(x > problem.upper):
        raise ConfigError(f"point {x} violates the bounds")
    r = problem.residuals(x)
    return float(r @ r), r


@dataclass(frozen=True)
class EvaluationRecord:
    """One black-box evaluation: point, residual vector, objective, order index."""

    x: np.ndarray
    residuals: np.ndarray
    f: float
    index: int


@dataclass
class FitResult:
    """Solver outcome: best point plus the ordered trace of new evaluations."""

    x: np.ndarray
    f: float
    trace: list[EvaluationRecord]
    termination: str
    n_evals: int
    first_accept_new_evals: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def best_curve(self, baseline: float = np.inf) -> np.ndarray:
        """Running best objective after each new evaluation."""
        out = np.empty(len(self.trace))
        best = baseline
        for i, rec in enumerate(self.trace):
            best = min(best, rec.f)
            out[i] = best
        return out
