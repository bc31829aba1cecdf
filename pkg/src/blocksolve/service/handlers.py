"""Operation handlers behind the endpoints and the CLI.

Each handler takes a validated request model and returns (report, timings):
the report is a fully deterministic document, timings are wall-clock
seconds per phase and are kept separate so golden-file comparisons can
ignore them.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from .. import mmio, reporting
from ..errors import ConfigError
from ..fitting import make_problem, pounder_minimize, pounders_minimize, warm_start
from ..fitting.solver import SolverOptions
from ..noise import noise_map
from ..pipeline import NullspaceOptions, brute_force_filter, solve_fixedj
from ..reporting import SCHEMAS, header, proc_set_compact
from ..scheduling import (
    CostModelParams,
    SizeClassThresholds,
    classify,
    cyclic_assign,
    evaluate,
    greedy_assign,
    synth_loads,
)
from ..spinmodel import spin_system
from .schemas import FitRequest, FixedJRequest, NoiseRequest, ScheduleRequest

PROBLEM_SCHEMA = "blocksolve/problem/v1"


def _load_model(req: FixedJRequest):
    if (req.model is None) == (req.manifest is None):
        raise ConfigError("specify exactly one of model or manifest")
    if req.model is not None:
        return spin_system(req.model.n, req.model.couplings, req.model.periodic)
    jsq, ham = mmio.read_blocked_operators(req.manifest)
    if ham is None:
        raise ConfigError("manifest carries no hamiltonian blocks")
    return jsq, ham


def run_fixedj(req: FixedJRequest):
    config = req.model_dump()
    jsq, ham = _load_model(req)
    opts = NullspaceOptions(**req.params.model_dump())
    result, bases, assignment, timings = solve_fixedj(
        jsq, ham, j=req.j, algo=req.algo, k=req.k, n_procs=req.n_procs,
        policy=req.policy, workers=req.workers, seed=req.seed, opts=opts,
    )
    report = {
        "schema": SCHEMAS["spectrum"],
        "header": header("fixedj", config, req.seed),
        "j": req.j,
        "lambda": req.j * (req.j + 1),
        "algo": req.algo,
        "k": req.k,
        "blocks": [
            {
                "sector": sector,
                "label": block.label,
                "dim": block.dim,
                "r": basis.r,
                "procs": proc_set_compact(assignment.procs_by_block.get(i, ())),
            }
            for i, ((sector, block), basis) in enumerate(zip(jsq, bases))
        ],
        "projected_dim": result.total_count,
        "eigenvalues": list(result.eigenvalues),
        "states": [
            {
                "energy": float(result.eigenvalues[i]),
                "h_residual": float(result.h_residuals[i]),
                "jsq_residual": float(result.jsq_residuals[i]),
            }
            for i in range(len(result.eigenvalues))
        ],
        "schedule": {"policy": req.policy, "n_procs": req.n_procs},
    }
    if req.oracle:
        t0 = time.perf_counter()
        ref = brute_force_filter(ham, jsq, req.j, tol=1e-8,
                                 dense_cap=req.params.dense_cap)
        timings["oracle"] = time.perf_counter() - t0
        k_cmp = min(len(result.eigenvalues), len(ref.eigenvalues))
        diff = float(
            np.max(np.abs(result.eigenvalues[:k_cmp] - ref.eigenvalues[:k_cmp]))
        ) if k_cmp else 0.0
        report["oracle"] = {
            "energies": list(ref.eigenvalues[:k_cmp]),
            "total_count": ref.total_count,
            "max_abs_diff": diff,
            "agrees": diff <= 1e-8,
        }
    return report, timings, bases


def _schedule_loads(req: ScheduleRequest):
    if (req.profile is None) == (req.loads_path is None):
        raise ConfigError("specify exactly one of profile or loads_path")
    if req.profile is not None:
        return synth_loads(req.profile, seed=req.seed, n_blocks=req.n_blocks)
    return reporting.read_loads(req.loads_path)


def run_schedule(req: ScheduleRequest):
    config = req.model_dump()
    t0 = time.perf_counter()
    loads = _schedule_loads(req)
    thresholds = SizeClassThresholds(req.small_max_dim, req.medium_max_dim)
    cost = CostModelParams(alpha=req.alpha)
    small, medium, large = classify(loads, thresholds)
    policies = ("greedy", "cyclic") if req.compare else (req.policy,)
    results = []
    timings = {"load": time.perf_counter() - t0}
    for policy in policies:
        t0 = time.perf_counter()
        if policy == "greedy":
            asg = greedy_assign(loads, req.n_procs, thresholds, cost)
        else:
            asg = cyclic_assign(loads, req.n_procs)
        metrics = evaluate(asg, loads, cost)
        timings[policy] = time.perf_counter() - t0
        results.append({
            "policy": policy,
            "makespan": metrics.makespan,
            "imbalance": metrics.imbalance,
            "per_proc_load": list(metrics.per_proc_load),
            "assignment": {
                str(b.id): proc_set_compact(asg.procs_by_block[b.id]) for b in loads
            },
        })
    report = {
        "schema": SCHEMAS["schedule"],
        "header": header("schedule", config, req.seed),
        "loads": {
            "count": len(loads),
            "min_dim": min(b.dim for b in loads),
            "max_dim": max(b.dim for b in loads),
            "classes": {"small": len(small), "medium": len(medium), "large": len(large)},
            "total_work": float(sum(b.work for b in loads)),
        },
        "n_procs": req.n_procs,
        "results": results,
    }
    if req.compare:
        by = {r["policy"]: r["makespan"] for r in results}
        report["comparison"] = {
            "greedy_makespan": by["greedy"],
            "cyclic_makespan": by["cyclic"],
            "greedy_over_cyclic": by["greedy"] / by["cyclic"] if by["cyclic"] else float("inf"),
        }
    return report, timings


def _load_problem_spec(req) -> dict:
    if (req.problem is None) == (req.problem_path is None):
        raise ConfigError("specify exactly one of problem or problem_path")
    if req.problem is not None:
        spec = dict(req.problem)
    else:
        path = Path(req.problem_path)
        if not path.exists():
            raise ConfigError(f"problem file not found: {path}")
        try:
            spec = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed problem file {path}: {exc}") from exc
        if spec.pop("schema", PROBLEM_SCHEMA) != PROBLEM_SCHEMA:
            raise ConfigError("unsupported problem schema")
    spec.setdefault("seed", req.seed)
    return spec


def run_fit(req: FitRequest):
    config = req.model_dump()
    spec = _load_problem_spec(req)
    problem, x0, info = make_problem(dict(spec))
    warm = None
    warm_baseline = float("inf")
    if req.warm_path:
        warm = warm_start(reporting.read_history(req.warm_path, problem.n, problem.o))
        if warm:
            warm_baseline = min(rec.f for rec in warm)
    options = SolverOptions(
        max_evals=req.max_evals, noise_floor=req.noise_floor,
        delta0=req.delta0, delta_min=req.delta_min,
    )
    algos = ("pounders", "pounder") if req.compare else (req.algo,)
    runs = []
    timings = {}
    failed = False
    for algo in algos:
        solver = pounders_minimize if algo == "pounders" else pounder_minimize
        t0 = time.perf_counter()
        result = solver(problem, x0, options, warm=warm)
        timings[algo] = time.perf_counter() - t0
        failed = failed or result.termination.startswith("evaluator failure")
        runs.append((algo, result))
    trace_rows = []
    for algo, result in runs:
        curve = result.best_curve(baseline=warm_baseline)
        for rec, best in zip(result.trace, curve):
            trace_rows.append({
                "algo": algo, "index": rec.index, "f": rec.f, "f_best": float(best),
            })
    report = {
        "schema": SCHEMAS["fit-summary"],
        "header": header("fit", config, req.seed),
        "problem": {**spec, "n": problem.n, "o": problem.o, "name": problem.name},
        "warm_records": len(warm) if warm else 0,
        "results": [
            {
                "algo": algo,
                "best_x": list(result.x),
                "best_f": result.f,
                "n_evals": result.n_evals,
                "termination": result.termination,
                "first_accept_new_evals": result.first_accept_new_evals,
                "max_interp_error": result.diagnostics["max_interp_error"],
            }
            for algo, result in runs
        ],
        "trace": trace_rows,
        "failed": failed,
    }
    return report, timings, runs


def run_noise(req: NoiseRequest):
    config = req.model_dump()
    spec = _load_problem_spec(req)
    problem, x0, info = make_problem(dict(spec))
    if (req.points is None) == (req.points_path is None):
        raise ConfigError("specify exactly one of points or points_path")
    if req.points is not None:
        points = [np.asarray(p, dtype=float) for p in req.points]
    else:
        _, rows = reporting.read_csv_document(req.points_path)
        points = []
        for idx, row in enumerate(rows):
            try:
                points.append(np.array([float(row[f"x{i}"]) for i in range(problem.n)]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"malformed point row {idx}: {exc}") from exc
    if not points:
        raise ConfigError("points file contains no points")
    for idx, p in enumerate(points):
        if p.shape != (problem.n,):
            raise ConfigError(f"point {idx} has wrong dimension {p.shape}")

    def scalar(x):
        xp = problem.project(np.atleast_1d(x))
        r = problem.residuals(xp)
        return float(r @ r)

    t0 = time.perf_counter()
    estimates = noise_map(scalar, points, h=req.h, m=req.m, seed=req.seed)
    timings = {"noise_map": time.perf_counter() - t0}
    rows = []
    sigmas = []
    for idx, est, err in estimates:
        if est is None:
            rows.append({
                "point_id": idx, "f": float("nan"), "sigma_abs": float("nan"),
                "sigma_rel": float("nan"), "order": -1, "reliable": False,
                "note": err,
            })
            continue
        sigmas.append(est.sigma_abs)
        rows.append({
            "point_id": idx,
            "f": float(est.samples[0]),
            "sigma_abs": est.sigma_abs,
            "sigma_rel": est.sigma_rel,
            "order": est.order,
            "reliable": est.reliable,
            "note": est.advisory,
        })
    report = {
        "schema": SCHEMAS["noise"],
        "header": header("noise", config, req.seed),
        "problem": {**spec, "n": problem.n, "o": problem.o, "name": problem.name},
        "rows": rows,
    }
    declared = float(spec.get("noise", 0.0))
    if sigmas:
        summary = {
            "median_sigma_abs": float(np.median(sigmas)),
            "declared_observable_noise": declared,
        }
        if declared > 0.0:
            # additive observable noise eps propagates to f = sum r_i^2 with
            # sigma_f ~= 2 eps sqrt(sum (r_i / sigma_i)^2)
            ratios = []
            for row in rows:
                if not row["reliable"] or not np.isfinite(row["f"]) or row["f"] <= 0:
                    continue
                xp = problem.project(points[row["point_id"]])
                r = problem.residuals(xp)
                expected = 2.0 * declared * float(np.sqrt(np.sum((r / problem.sigma) ** 2)))
                if expected > 0:
                    ratios.append(row["sigma_abs"] / expected)
            if ratios:
                med = float(np.median(ratios))
                summary["median_recovery_ratio"] = med
                summary["recovered_within_factor_2"] = bool(0.5 <= med <= 2.0)
        report["summary"] = summary
    return report, timings
