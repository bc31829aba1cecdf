"""Pydantic request models shared by the HTTP endpoints and the CLI."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class SpinModelSpec(BaseModel):
    n: int = Field(ge=1, le=20)
    couplings: Optional[list[float]] = None
    periodic: bool = False


class NullspaceParams(BaseModel):
    tol: float = 1e-12
    rank_tol: Optional[float] = None
    shift_offset: float = 0.5
    k_max: Optional[int] = None
    degree: int = 50
    block_size: int = 8
    max_iters: int = 300
    gap: float = 2.0
    dense_cap: int = 4096


class FixedJRequest(BaseModel):
    model: Optional[SpinModelSpec] = None
    manifest: Optional[str] = None
    j: float = Field(ge=0)
    algo: Literal["rqr", "sil", "pasi"] = "pasi"
    k: int = Field(default=5, ge=1)
    n_procs: int = Field(default=1, ge=1)
    policy: Literal["greedy", "cyclic"] = "greedy"
    workers: Optional[int] = Field(default=None, ge=1)
    oracle: bool = False
    seed: int = 0
    params: NullspaceParams = NullspaceParams()


class ScheduleRequest(BaseModel):
    profile: Optional[str] = None
    loads_path: Optional[str] = None
    n_procs: int = Field(ge=1)
    policy: Literal["greedy", "cyclic"] = "greedy"
    alpha: float = 0.05
    compare: bool = False
    seed: int = 0
    n_blocks: int = Field(default=200, ge=1)
    small_max_dim: int = 512
    medium_max_dim: int = 4096


class FitRequest(BaseModel):
    problem: Optional[dict] = None
    problem_path: Optional[str] = None
    algo: Literal["pounders", "pounder"] = "pounders"
    max_evals: int = Field(default=200, ge=2)
    seed: int = 0
    warm_path: Optional[str] = None
    compare: bool = False
    noise_floor: float = 0.0
    delta0: Optional[float] = None
    delta_min: Optional[float] = None


class NoiseRequest(BaseModel):
    problem: Optional[dict] = None
    problem_path: Optional[str] = None
    points: Optional[list[list[float]]] = None
    points_path: Optional[str] = None
    h: Optional[float] = None
    m: int = Field(default=8, ge=4)
    seed: int = 0


class RunResponse(BaseModel):
    """Envelope for every solver endpoint: the report plus segregated timings."""

    report: dict
    timings: dict


class HealthResponse(BaseModel):
    status: str
    version: str
