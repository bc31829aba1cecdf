"""HTTP wiring: one POST endpoint per solver operation.

Config problems map to 400, numerical failures to 422; both carry a
machine-readable error record matching the CLI's.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import ConfigError, NumericalError
from ..reporting import SCHEMAS, to_jsonable
from . import handlers
from .schemas import (
    FitRequest,
    FixedJRequest,
    HealthResponse,
    NoiseRequest,
    RunResponse,
    ScheduleRequest,
)


def _error_record(kind: str, exc: Exception) -> dict:
    return {
        "schema": SCHEMAS["error"],
        "error": {"type": type(exc).__name__, "kind": kind, "message": str(exc)},
    }


def _guard(fn, *args):
    try:
        return fn(*args)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=_error_record("config", exc)) from exc
    except NumericalError as exc:
        raise HTTPException(status_code=422, detail=_error_record("numerical", exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(
        title="blocksolve",
        version=__version__,
        description="Fixed angular-momentum spectra, block scheduling, "
                    "derivative-free fitting, and noise estimation as a service.",
    )

    @app.get("/api/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/api/v1/fixedj", response_model=RunResponse)
    def fixedj(req: FixedJRequest) -> RunResponse:
        report, timings, _ = _guard(handlers.run_fixedj, req)
        return RunResponse(report=to_jsonable(report), timings=to_jsonable(timings))

    @app.post("/api/v1/schedule", response_model=RunResponse)
    def schedule(req: ScheduleRequest) -> RunResponse:
        report, timings = _guard(handlers.run_schedule, req)
        return RunResponse(report=to_jsonable(report), timings=to_jsonable(timings))

    @app.post("/api/v1/fit", response_model=RunResponse)
    def fit(req: FitRequest) -> RunResponse:
        report, timings, _ = _guard(handlers.run_fit, req)
        return RunResponse(report=to_jsonable(report), timings=to_jsonable(timings))

    @app.post("/api/v1/noise", response_model=RunResponse)
    def noise(req: NoiseRequest) -> RunResponse:
        report, timings = _guard(handlers.run_noise, req)
        return RunResponse(report=to_jsonable(report), timings=to_jsonable(timings))

    return app
