"""Model-based trust-region solvers for bound-constrained least squares.

Two entry points share one trust-region engine:

* :func:`pounders_minimize` builds one quadratic model per residual and
  aggregates them into a master model of the sum of squares; this is the
  structure-exploiting solver.
* :func:`pounder_minimize` models the scalar objective with a single
  quadratic and is otherwise identical, which makes evaluation-count
  comparisons between the two meaningful.

Both only ever evaluate inside the bounds (points are clipped exactly), and
both record every evaluation in order so fitting traces can be compared
across runs and warm starts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigError, EvaluatorError, NumericalError
from .models import (
    interpolate_models,
    master_model_residuals,
    master_model_scalar,
    scaled_system_cond,
    zero_models,
)
from .problem import EvaluationRecord, FitResult, ResidualProblem
from .subproblem import solve_subproblem


@dataclass(frozen=True)
class SolverOptions:
    delta0: float | None = None
    delta_min: float | None = None
    delta_max: float | None = None
    max_evals: int = 200
    eta_accept: float = 0.0
    eta_good: float = 0.75
    gamma_shrink: float = 0.5
    gamma_grow: float = 2.0
    c1: float = 10.0  # interpolation points stay within c1 * delta of the center
    cond_max: float = 1e6
    poise_min: float = 0.02  # smallest singular value of the scaled displacements
    noise_floor: float = 0.0
    seed: int = 0

    def resolved(self, x0: np.ndarray) -> "SolverOptions":
        scale = max(1.0, float(np.linalg.norm(x0, np.inf)))
        d0 = self.delta0 if self.delta0 is not None else 0.1 * scale
        return replace(
            self,
            delta0=d0,
            delta_min=self.delta_min if self.delta_min is not None else 1e-8 * max(1.0, float(np.linalg.norm(x0))),
            delta_max=self.delta_max if self.delta_max is not None else 1e3 * d0,
        )


class _BudgetExhausted(Exception):
    pass


class _State:
    """Interpolation set plus bookkeeping for one solver run."""

    def __init__(self, problem, residual_mode, options):
        self.problem = problem
        self.residual_mode = residual_mode
        self.options = options
        self.points: list[np.ndarray] = []
        self.obs: list[np.ndarray] = []
        self.fvals: list[float] = []
        self.center = 0
        self.max_points = 2 * problem.n + 1

    def column(self, record: EvaluationRecord) -> np.ndarray:
        return record.residuals.copy() if self.residual_mode else np.array([record.f])

    def add_record(self, record: EvaluationRecord) -> int:
        for i, pt in enumerate(self.points):
            if np.array_equal(pt, record.x):
                return i  # duplicate point: keep the stored copy
        self.points.append(record.x.copy())
        self.obs.append(self.column(record))
        self.fvals.append(record.f)
        return len(self.points) - 1

    def drop(self, idx: int) -> None:
        if idx == self.center:
            raise ConfigError("internal error: dropping the trust-region center")
        del self.points[idx]
        del self.obs[idx]
        del self.fvals[idx]
        if idx < self.center:
            self.center -= 1

    def center_x(self) -> np.ndarray:
        return self.points[self.center]

    def distances(self) -> np.ndarray:
        cx = self.center_x()
        return np.array([np.linalg.norm(p - cx) for p in self.points])

    def trim_to_cap(self) -> None:
        while len(self.points) > self.max_points:
            dist = self.distances()
            dist[self.center] = -1.0
            best = int(np.argmin(self.fvals))
            if best != self.center:
                dist[best] = -0.5
            self.drop(int(np.argmax(dist)))


def warm_start(history) -> list[EvaluationRecord]:
    """Validate and deduplicate prior evaluations into a solver seed state."""
    seen = {}
    shape = None
    cleaned = []
    for rec in history:
        x = np.asarray(rec.x, dtype=float)
        r = np.asarray(rec.residuals, dtype=float)
        if shape is None:
            shape = (x.shape, r.shape)
        elif (x.shape, r.shape) != shape:
            raise ConfigError("inconsistent record shapes in warm-start history")
        key = x.tobytes()
        if key in seen:
            continue
        seen[key] = True
        cleaned.append(EvaluationRecord(x=x, residuals=r, f=float(rec.f), index=rec.index))
    return cleaned


def pounders_minimize(problem, x0, options=None, warm=None) -> FitResult:
    """Residual-structured model-based minimization of the weighted misfit."""
    return _minimize(problem, x0, options, warm, residual_mode=True)


def pounder_minimize(problem, x0, options=None, warm=None) -> FitResult:
    """Same trust-region engine, but a single quadratic model of the scalar f."""
    return _minimize(problem, x0, options, warm, residual_mode=False)


def _minimize(problem: ResidualProblem, x0, options, warm, residual_mode) -> FitResult:
    x0 = problem.project(np.asarray(x0, dtype=float))
    options = (options or SolverOptions()).resolved(x0)
    trace: list[EvaluationRecord] = []
    diagnostics = {"max_interp_error": 0.0, "first_master_gradient": None,
                   "interp_errors": []}
    termination = "radius below minimum"
    first_accept: int | None = None

    def evaluate(x) -> EvaluationRecord:
        if len(trace) >= options.max_evals:
            raise _BudgetExhausted
        x = problem.project(x)
        r = problem.residuals(x)
        rec = EvaluationRecord(x=x, residuals=r, f=float(r @ r), index=len(trace))
        trace.append(rec)
        return rec

    state = _State(problem, residual_mode, options)
    warm = warm or []
    n = problem.n
    delta = options.delta0

    try:
        if warm:
            feasible = [
                rec for rec in warm
                if np.all(rec.x >= problem.lower) and np.all(rec.x <= problem.upper)
            ]
            if feasible:
                best = min(feasible, key=lambda rec: rec.f)
                ranked = sorted(feasible, key=lambda rec: float(np.linalg.norm(rec.x - best.x)))
                for rec in ranked[: state.max_points]:
                    state.add_record(rec)
                state.center = 0  # the best record ranks first
                first_accept = 0
        if not state.points:
            rec = evaluate(x0)
            state.center = state.add_record(rec)
        _initial_design(state, evaluate, delta)

        models = zero_models(state.center_x(), problem.o if residual_mode else 1)
        while True:
            _maintain_geometry(state, evaluate, delta)
            pts = np.array(state.points)
            vals = np.array(state.obs)
            models = models.shift_center(state.center_x())
            try:
                models, err = interpolate_models(pts, vals, models, delta)
                if err > 1e-11:
                    # a huge prior model can poison the solve; refit cleanly
                    refit, refit_err = interpolate_models(
                        pts, vals, zero_models(state.center_x(), vals.shape[1]), delta,
                    )
                    if refit_err < err:
                        models, err = refit, refit_err
            except NumericalError:
                err = float("inf")
            if err > 1e-10:
                # geometry is unusable at this radius despite repair: the
                # interpolation-exactness contract wins; tighten and retry
                delta *= options.gamma_shrink
                if delta < options.delta_min:
                    break
                continue
            diagnostics["max_interp_error"] = max(diagnostics["max_interp_error"], err)
            diagnostics["interp_errors"].append(err)
            grad, hess = (
                master_model_residuals(models)
                if residual_mode
                else master_model_scalar(models)
            )
            if diagnostics["first_master_gradient"] is None:
                diagnostics["first_master_gradient"] = grad.copy()

            cx = state.center_x()
            step, pred = solve_subproblem(
                grad, hess, delta, problem.lower - cx, problem.upper - cx
            )
            if pred <= options.noise_floor:
                delta *= options.gamma_shrink
                if delta < options.delta_min:
                    break
                continue

            rec = evaluate(cx + step)
            idx = state.add_record(rec)
            rho = (state.fvals[state.center] - rec.f) / pred
            if rho > options.eta_accept and rec.f < state.fvals[state.center]:
                state.center = idx
                if first_accept is None:
                    first_accept = len(trace)
            if rho < 0.25:
                delta *= options.gamma_shrink
            elif rho > options.eta_good and np.linalg.norm(step) >= 0.9 * delta:
                delta = min(delta * options.gamma_grow, options.delta_max)
            state.trim_to_cap()
            if delta < options.delta_min:
                break
    except _BudgetExhausted:
        termination = "budget exhausted"
    except EvaluatorError as exc:
        termination = f"evaluator failure: {exc.cause}"

    if trace:
        best = min(trace, key=lambda rec: rec.f)
        best_x, best_f = best.x, best.f
    else:
        best_x, best_f = x0, float("inf")
    if warm:
        warm_best = min(warm, key=lambda rec: rec.f)
        if warm_best.f < best_f:
            best_x, best_f = warm_best.x, warm_best.f
    return FitResult(
        x=np.asarray(best_x, dtype=float), f=float(best_f), trace=trace,
        termination=termination, n_evals=len(trace),
        first_accept_new_evals=first_accept, diagnostics=diagnostics,
    )


def _initial_design(state: _State, evaluate, delta) -> None:
    """Center plus clipped +-delta coordinate displacements (2n+1 points)."""
    problem = state.problem
    cx = state.center_x()
    for j in range(problem.n):
        for sign in (+1.0, -1.0):
            if len(state.points) >= state.max_points:
                return
            cand = cx.copy()
            cand[j] += sign * delta
            cand = problem.project(cand)
            if any(np.array_equal(cand, p) for p in state.points):
                continue
            state.add_record(evaluate(cand))


def _weakest_direction(state: _State, delta) -> np.ndarray:
    """Unit direction least covered by the current displacement set."""
    cx = state.center_x()
    rows = [
        (p - cx) / delta for i, p in enumerate(state.points) if i != state.center
    ]
    if not rows:
        v = np.zeros(state.problem.n)
        v[0] = 1.0
        return v
    d = np.array(rows)
    _, svals, vt = np.linalg.svd(d, full_matrices=True)
    if len(svals) < state.problem.n:
        return vt[len(svals)]
    return vt[-1]


def _maintain_geometry(state: _State, evaluate, delta) -> None:
    """Keep the set affinely poised, well conditioned, and near the center."""
    problem = state.problem
    options = state.options
    # drop every point outside c1 * delta; the repair phase below restores
    # the set at the current scale (fresh evaluations)
    while len(state.points) > 1:
        dist = state.distances()
        dist[state.center] = 0.0
        worst = int(np.argmax(dist))
        if dist[worst] <= options.c1 * delta:
            break
        state.drop(worst)
    # points indistinguishable from the center at this radius add no
    # geometry, only conditioning trouble
    while len(state.points) > 1:
        dist = state.distances()
        dist[state.center] = np.inf
        nearest = int(np.argmin(dist))
        if dist[nearest] >= 1e-3 * delta:
            break
        state.drop(nearest)
    # repair rank deficiency / conditioning with fresh geometry points
    for _ in range(problem.n + 2):
        need_point = len(state.points) < problem.n + 1
        weak = False
        if not need_point:
            cx = state.center_x()
            d = np.array(
                [(p - cx) / delta for i, p in enumerate(state.points) if i != state.center]
            )
            svals = np.linalg.svd(d, compute_uv=False)
            weak = len(svals) < problem.n or svals.min() < options.poise_min
            if not weak:
                cond = scaled_system_cond(np.array(state.points), cx, delta)
                weak = cond > options.cond_max
        if not (need_point or weak):
            return
        v = _weakest_direction(state, delta)
        cx = state.center_x()
        cand = None
        for trial in (delta * v, -delta * v, 0.5 * delta * v, -0.5 * delta * v):
            c = problem.project(cx + trial)
            if np.linalg.norm(c - cx) < 0.05 * delta:
                continue
            if any(np.array_equal(c, p) for p in state.points):
                continue
            cand = c
            break
        if cand is None:
            return  # nothing new to add along this direction
        if len(state.points) >= state.max_points:
            dist = state.distances()
            dist[state.center] = -1.0
            state.drop(int(np.argmax(dist)))
        state.add_record(evaluate(cand))
