"""HTTP wiring: JSON endpoints over the session engine."""
from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from ..domain import (
    DomainError,
    ConfigurationError,
    FeasibilityConstraints,
    StimulusParams,
    TrialOutcome,
)
from ..gp import GPConfig
from ..patterns import generate_standard_pattern
from .engine import ServiceError, SessionEngine
from .schemas import CreateSessionRequest, OutcomeRequest


def create_app(store_dir=None, config: GPConfig = GPConfig()) -> FastAPI:
    app = FastAPI(title="wmsurface", version="0.1.0")
    engine = SessionEngine(store_dir=store_dir, config=config)
    app.state.engine = engine

    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(DomainError)
    async def _domain_error(request: Request, exc: DomainError):
        return JSONResponse(status_code=400, content={"code": "invalid", "message": str(exc)})

    @app.exception_handler(ConfigurationError)
    async def _config_error(request: Request, exc: ConfigurationError):
        return JSONResponse(
            status_code=400, content={"code": "bad_configuration", "message": str(exc)}
        )

    @app.post("/sessions")
    def create_session(body: CreateSessionRequest):
        constraints = (
            FeasibilityConstraints(
                polygon_mask=[tuple(v) for v in body.constraints.polygon_mask],
                integer_snap=body.constraints.integer_snap,
                step_cap=body.constraints.step_cap,
                bounds=(
                    tuple(body.constraints.bounds[0]),
                    tuple(body.constraints.bounds[1]),
                ),
            )
            if body.constraints
            else None
        )
        phantoms = [
            TrialOutcome(StimulusParams(p.params.L, p.params.K), p.passed, True, -(i + 1))
            for i, p in enumerate(body.phantoms)
        ]
        return engine.create_session(
            mode=body.mode,
            seed=body.seed,
            constraints=constraints,
            phantoms=phantoms,
            idempotency_token=body.idempotency_token,
        )

    @app.post("/sessions/{session_id}/outcome")
    def report_outcome(session_id: str, body: OutcomeRequest):
        return engine.report_outcome(
            session_id,
            StimulusParams(body.params.L, body.params.K),
            body.passed,
            token=body.idempotency_token,
        )

    @app.get("/sessions/{session_id}/posterior")
    def get_posterior(session_id: str):
        return engine.posterior(session_id)

    @app.post("/sessions/{session_id}/archive")
    def archive(session_id: str):
        return engine.archive(session_id).to_dict()

    @app.get("/patterns")
    def get_pattern(
        L: int = Query(ge=1, le=16),
        K: int = Query(ge=1, le=8),
        seed: int = Query(default=0),
        pool_size: Optional[int] = Query(default=None, ge=1),
    ):
        params = StimulusParams(L, K)
        if not params.is_feasible:
            raise DomainError(f"(L={L}, K={K}) violates K <= L")
        kwargs = {"pool_size": pool_size} if pool_size else {}
        return generate_standard_pattern(params, seed, **kwargs).to_dict()

    return app
