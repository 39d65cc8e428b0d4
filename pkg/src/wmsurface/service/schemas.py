"""Request/response bodies for the HTTP API."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

from ..domain import Mode


class ParamsBody(BaseModel):
    L: int = Field(ge=1, le=16)
    K: int = Field(ge=1, le=8)


class PhantomBody(BaseModel):
    params: ParamsBody
    passed: bool


class ConstraintsBody(BaseModel):
    polygon_mask: list[tuple[float, float]]
    integer_snap: bool = True
    step_cap: int = 2
    bounds: tuple[tuple[int, int], tuple[int, int]] = ((1, 16), (1, 8))


class CreateSessionRequest(BaseModel):
    mode: Mode = Mode.ADAPTIVE
    seed: int = 0
    constraints: Optional[ConstraintsBody] = None
    phantoms: list[PhantomBody] = Field(default_factory=list)
    idempotency_token: Optional[str] = None


class OutcomeRequest(BaseModel):
    params: ParamsBody
    passed: bool
    idempotency_token: Optional[str] = None


class ErrorBody(BaseModel):
    code: str
    message: str
