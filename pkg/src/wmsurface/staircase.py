"""Classic mode: one-up/one-down staircase over L at fixed K, with the
logistic threshold fit used to summarize the series."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .domain import DomainError, L_MAX, L_MIN, StimulusParams, TrialOutcome

# single synthetic failure appended just beyond the task range to
# regularize near-ceiling fits
PHANTOM_FAIL_L = L_MAX + 1


class TerminationReason(str, Enum):
    TWO_FAILS_SAME_L = "two_fails_same_l"
    REACHED_MAX = "reached_max"


@dataclass
class StaircaseState:
    current_l: int = L_MIN
    fixed_k: int = 3
    fail_counts: dict = field(default_factory=dict)
    trial_log: list = field(default_factory=list)
    terminated: bool = False
    termination_reason: Optional[TerminationReason] = None

    @property
    def current_params(self) -> StimulusParams:
        return StimulusParams(self.current_l, self.fixed_k)

    def to_dict(self) -> dict:
        return {
            "current_l": self.current_l,
            "fixed_k": self.fixed_k,
            "fail_counts": {str(k): v for k, v in self.fail_counts.items()},
            "trial_log": [o.to_dict() for o in self.trial_log],
            "terminated": self.terminated,
            "termination_reason": self.termination_reason.value if self.termination_reason else None,
        }


@dataclass(frozen=True)
class ThresholdEstimate:
    psi_theta: float
    slope: float
    capped: bool
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "psi_theta": self.psi_theta,
            "slope": self.slope,
            "capped": self.capped,
            "degenerate": self.degenerate,
        }


class FitError(RuntimeError):
    """Logistic fit produced a non-finite threshold; the session should be
    excluded by downstream validity filtering."""


def staircase_step(state: StaircaseState, passed: bool) -> StaircaseState:
    """Advance the staircase by one outcome (pure: returns a new state).

    L moves +1 on pass, -1 on fail, clamped to the task range. Terminates
    on a second failure at any single L or on a pass at the maximum L.
    Fails are recorded at the L actually attempted, including a fail at
    L = 1 after clamping.
    """
    if state.terminated:
        raise DomainError("cannot step a terminated staircase")
    l = state.current_l
    log = list(state.trial_log)
    log.append(
        TrialOutcome(StimulusParams(l, state.fixed_k), passed, False, len(log))
    )
    fails = dict(state.fail_counts)
    terminated = False
    reason = None
    if passed:
        if l == L_MAX:
            terminated = True
            reason = TerminationReason.REACHED_MAX
        new_l = min(l + 1, L_MAX)
    else:
        fails[l] = fails.get(l, 0) + 1
        if fails[l] >= 2:
            terminated = True
            reason = TerminationReason.TWO_FAILS_SAME_L
        new_l = max(l - 1, L_MIN)
    return StaircaseState(
        current_l=new_l,
        fixed_k=state.fixed_k,
        fail_counts=fails,
        trial_log=log,
        terminated=terminated,
        termination_reason=reason,
    )


def run_staircase(respond, fixed_k: int = 3, max_trials: int = 200) -> StaircaseState:
    """Drive a staircase to termination with a callable respond(params) -> bool."""
    state = StaircaseState(fixed_k=fixed_k)
    for _ in range(max_trials):
        state = staircase_step(state, bool(respond(state.current_params)))
        if state.terminated:
            break
    return state


def _neg_log_likelihood(theta: float, sigma: float, ls: np.ndarray, ys: np.ndarray) -> float:
    # pass probability decreasing in L: p(pass) = sigmoid((theta - L) / sigma)
    z = (theta - ls) / sigma
    return float(np.sum(np.where(ys > 0.5, np.logaddexp(0.0, -z), np.logaddexp(0.0, z))))


def fit_logistic_threshold(trial_log: Sequence[TrialOutcome]) -> ThresholdEstimate:
    """Maximum-likelihood 2-parameter logistic fit of pass/fail vs L.

    A single phantom failure at L = 17 is appended before fitting. The
    returned threshold is the 50% point, capped at the task maximum.
    """
    if not trial_log:
        raise DomainError("empty trial log")
    ls = np.array([o.params.L for o in trial_log] + [PHANTOM_FAIL_L], dtype=float)
    ys = np.array([1.0 if o.passed else 0.0 for o in trial_log] + [0.0])

    # multistart grid, then local refinement from the best cell
    thetas = np.arange(0.0, 18.01, 0.5)
    sigmas = np.geomspace(0.1, 8.0, 13)
    best = None
    for th in thetas:
        for sg in sigmas:
            nll = _neg_log_likelihood(th, sg, ls, ys)
            if best is None or nll < best[0]:
                best = (nll, th, sg)
    res = minimize(
        lambda p: _neg_log_likelihood(p[0], p[1], ls, ys),
        x0=np.array([best[1], best[2]]),
        bounds=[(-5.0, 25.0), (0.05, 10.0)],
        method="L-BFGS-B",
    )
    theta, sigma = (res.x if res.fun <= best[0] else (best[1], best[2]))
    if not (np.isfinite(theta) and np.isfinite(sigma)):
        raise FitError(f"non-finite logistic fit: theta={theta}, sigma={sigma}")
    capped = theta > L_MAX
    degenerate = theta < L_MIN  # e.g. all-fail data
    return ThresholdEstimate(
        psi_theta=float(min(theta, L_MAX)),
        slope=float(sigma),
        capped=bool(capped),
        degenerate=bool(degenerate),
    )
