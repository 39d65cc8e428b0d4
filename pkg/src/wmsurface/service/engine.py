"""Framework-independent session engine: per-session state machines for
the adaptive and classic modes, idempotency caching, and the JSON store."""
from __future__ import annotations

import json
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..acquisition import primer_sequence, propose_next
from ..domain import (
    FeasibilityConstraints,
    Mode,
    SessionRecord,
    StimulusParams,
    TrialOutcome,
    classic_constraints,
)
from ..gp import GPConfig, GridSpec, fit, predict_grid, prior_grid, update_online
from ..isocontour import extract_isocontour, standardize_posterior
from ..staircase import StaircaseState, fit_logistic_threshold, staircase_step

ADAPTIVE_BUDGET = 30


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class _Session:
    def __init__(
        self,
        session_id: str,
        mode: Mode,
        seed: int,
        constraints: FeasibilityConstraints,
        phantoms: list[TrialOutcome],
        config: GPConfig,
    ):
        self.lock = threading.RLock()
        self.session_id = session_id
        self.mode = mode
        self.seed = seed
        self.constraints = constraints
        self.phantoms = phantoms
        self.config = config
        self.created_at = datetime.now(timezone.utc).isoformat()
        self.status = "open"
        self.outcomes: list[TrialOutcome] = []
        self.mismatches: list[dict] = []
        self.termination: Optional[dict] = None
        self._outcome_tokens: dict[str, dict] = {}
        self.model_state = None
        self.final_state = None  # standardized model at close (adaptive)
        if mode is Mode.ADAPTIVE:
            self.pending = primer_sequence()[0]
            self.staircase = None
        else:
            self.staircase = StaircaseState(fixed_k=3)
            self.pending = self.staircase.current_params

    # ---- adaptive flow -------------------------------------------------

    def _training_data(self) -> list[TrialOutcome]:
        return list(self.phantoms) + list(self.outcomes)

    def _refit(self, new_outcome: TrialOutcome):
        if self.model_state is None:
            self.model_state = fit(self._training_data(), self.config)
        else:
            self.model_state = update_online(self.model_state, new_outcome, self.config)

    def _next_adaptive(self) -> StimulusParams:
        primers = primer_sequence()
        n = len(self.outcomes)
        if n < len(primers):
            return primers[n]
        grid = predict_grid(self.model_state, GridSpec())
        return propose_next(grid, self._training_data(), self.constraints)

    def _close_adaptive(self) -> dict:
        self.status = "closed"
        self.final_state = standardize_posterior(self.outcomes, self.constraints, self.config)
        grid = predict_grid(self.final_state, GridSpec())
        curve = extract_isocontour(grid)
        self.termination = {
            "terminated": True,
            "trials": len(self.outcomes),
            "curve": curve.to_dict(),
        }
        return self.termination

    # ---- classic flow --------------------------------------------------

    def _close_classic(self) -> dict:
        self.status = "closed"
        est = fit_logistic_threshold(self.staircase.trial_log)
        self.termination = {
            "terminated": True,
            "trials": len(self.staircase.trial_log),
            "reason": self.staircase.termination_reason.value,
            "threshold": est.to_dict(),
        }
        return self.termination

    # ---- shared --------------------------------------------------------

    def report_outcome(self, params: StimulusParams, passed: bool, token: Optional[str]) -> dict:
        with self.lock:
            if token is not None and token in self._outcome_tokens:
                return self._outcome_tokens[token]
            if self.status != "open":
                raise ServiceError(409, "session_closed", f"session {self.session_id} is closed")
            if params != self.pending:
                self.mismatches.append(
                    {
                        "reported": params.to_dict(),
                        "expected": self.pending.to_dict(),
                        "at_trial": len(self.outcomes),
                    }
                )
            if self.mode is Mode.ADAPTIVE:
                outcome = TrialOutcome(params, passed, False, len(self.outcomes))
                self.outcomes.append(outcome)
                self._refit(outcome)
                if len(self.outcomes) >= ADAPTIVE_BUDGET:
                    response = self._close_adaptive()
                else:
                    self.pending = self._next_adaptive()
                    response = {"terminated": False, "next": self.pending.to_dict()}
            else:
                self.staircase = staircase_step(self.staircase, passed)
                self.outcomes.append(self.staircase.trial_log[-1])
                if self.staircase.terminated:
                    response = self._close_classic()
                else:
                    self.pending = self.staircase.current_params
                    response = {"terminated": False, "next": self.pending.to_dict()}
            if token is not None:
                self._outcome_tokens[token] = response
            return response

    def posterior(self) -> dict:
        with self.lock:
            if self.mode is not Mode.ADAPTIVE:
                raise ServiceError(
                    409, "unsupported_mode", "posterior grids exist only for adaptive sessions"
                )
            if self.status == "closed":
                grid = predict_grid(self.final_state, GridSpec())
            elif self.model_state is not None:
                grid = predict_grid(self.model_state, GridSpec())
            else:
                grid = prior_grid(self.config, GridSpec())
            return {"grid": grid.to_dict(), "curve": extract_isocontour(grid).to_dict()}

    def to_record(self) -> SessionRecord:
        with self.lock:
            snapshots = []
            state = self.final_state if self.status == "closed" else self.model_state
            hyper = None
            if state is not None:
                snapshots.append(predict_grid(state, GridSpec()).to_dict())
                hyper = state.hyperparameters.to_dict()
            return SessionRecord(
                session_id=self.session_id,
                mode=self.mode,
                seed=self.seed,
                constraints=self.constraints,
                outcomes=list(self.phantoms) + list(self.outcomes),
                posterior_snapshots=snapshots,
                hyperparameters=hyper,
            )

    def handle(self) -> dict:
        return {
            "session_id": self.session_id,
            "mode": self.mode.value,
            "status": self.status,
            "created_at": self.created_at,
            "first_recommendation": None,  # filled by caller on create
        }


class SessionEngine:
    """All live sessions plus the append-only JSON store."""

    def __init__(self, store_dir=None, config: GPConfig = GPConfig()):
        self._sessions: dict[str, _Session] = {}
        self._create_tokens: dict[str, str] = {}
        self._global = threading.Lock()
        self.config = config
        self.store_dir = Path(store_dir) if store_dir else None
        if self.store_dir:
            self.store_dir.mkdir(parents=True, exist_ok=True)

    def create_session(
        self,
        mode: Mode = Mode.ADAPTIVE,
        seed: int = 0,
        constraints: Optional[FeasibilityConstraints] = None,
        phantoms: Optional[list[TrialOutcome]] = None,
        idempotency_token: Optional[str] = None,
    ) -> dict:
        with self._global:
            if idempotency_token is not None and idempotency_token in self._create_tokens:
                sid = self._create_tokens[idempotency_token]
                sess = self._sessions[sid]
                out = sess.handle()
                out["first_recommendation"] = sess.pending.to_dict()
                return out
            if constraints is None:
                constraints = (
                    FeasibilityConstraints() if mode is Mode.ADAPTIVE else classic_constraints()
                )
            phantom_list = [
                TrialOutcome(p.params, p.passed, True, -(i + 1))
                for i, p in enumerate(phantoms or [])
            ]
            sid = uuid.uuid4().hex
            sess = _Session(sid, mode, seed, constraints, phantom_list, self.config)
            self._sessions[sid] = sess
            if idempotency_token is not None:
                self._create_tokens[idempotency_token] = sid
        out = sess.handle()
        out["first_recommendation"] = sess.pending.to_dict()
        return out

    def _get(self, session_id: str) -> _Session:
        with self._global:
            sess = self._sessions.get(session_id)
        if sess is None:
            raise ServiceError(404, "not_found", f"unknown session {session_id}")
        return sess

    def report_outcome(
        self, session_id: str, params: StimulusParams, passed: bool, token: Optional[str] = None
    ) -> dict:
        sess = self._get(session_id)
        response = sess.report_outcome(params, passed, token)
        if self.store_dir:
            with sess.lock:
                line = json.dumps(
                    {"params": params.to_dict(), "passed": passed, "token": token}
                )
                with open(self.store_dir / f"{session_id}.outcomes.jsonl", "a") as fh:
                    fh.write(line + "\n")
        return response

    def posterior(self, session_id: str) -> dict:
        return self._get(session_id).posterior()

    def archive(self, session_id: str) -> SessionRecord:
        sess = self._get(session_id)
        record = sess.to_record()
        if self.store_dir:
            (self.store_dir / f"{session_id}.json").write_text(record.to_json(indent=2))
        return record
