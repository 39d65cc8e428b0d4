"""Simulation harness: virtual participants built from threshold curves,
the three sampling policies (active, Halton, independent staircases), and
per-step isocontour accuracy tracking."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ndtr

from .acquisition import primer_sequence, propose_next
from .domain import (
    DomainError,
    FeasibilityConstraints,
    K_MAX,
    K_MIN,
    L_MAX,
    L_MIN,
    StimulusParams,
    TrialOutcome,
    snap_to_feasible,
)
from .gp import GPConfig, GridSpec, fit, predict_grid, update_online
from .isocontour import ThresholdCurve, band_curves, extract_isocontour
from .staircase import StaircaseState, staircase_step

SPREAD_FLOOR = 0.5
DEFAULT_SPREAD = 1.0
DEFAULT_GUESS = 0.02
DEFAULT_LAPSE = 0.02
# an absent estimated crossing at a K contributes the domain half-width
ABSENT_PENALTY = 7.5


class Policy(str, Enum):
    ACTIVE = "active"
    HALTON = "halton"
    INDEPENDENT_STAIRCASE = "independent_staircase"


@dataclass
class VirtualParticipant:
    """Session-matched response generator: cumulative-normal psychometric
    surface around a spline-smoothed psi(K), with guess and lapse."""

    psi_spline: CubicSpline
    source_curve: ThresholdCurve
    spread_by_k: dict
    guess: float
    lapse: float
    seed: int
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def psi(self, k: float) -> float:
        return float(self.psi_spline(k))

    def spread(self, k: int) -> float:
        return max(self.spread_by_k.get(int(round(k)), DEFAULT_SPREAD), SPREAD_FLOOR)

    def p_pass(self, params: StimulusParams) -> float:
        z = (self.psi(params.K) - params.L) / self.spread(params.K)
        return self.guess + (1.0 - self.guess - self.lapse) * float(ndtr(z))

    def truth_curve(self) -> ThresholdCurve:
        """The source curve: K values absent there stay absent (their
        crossings sit outside the task-feasible region and are excluded
        from RMSE by construction)."""
        return self.source_curve


def make_virtual_participant(
    curve: ThresholdCurve,
    guess: float = DEFAULT_GUESS,
    lapse: float = DEFAULT_LAPSE,
    seed: int = 0,
    spread: float = DEFAULT_SPREAD,
) -> VirtualParticipant:
    """Natural cubic spline through the curve's present (K, psi) knots."""
    if not (0.0 <= guess < 0.5 and 0.0 <= lapse < 0.5):
        raise DomainError("guess and lapse must lie in [0, 0.5)")
    knots = sorted(curve.psi_by_k.items())
    if len(knots) < 2:
        raise DomainError("virtual participant requires >= 2 present K values")
    ks = np.array([k for k, _ in knots], dtype=float)
    psis = np.array([p for _, p in knots], dtype=float)
    spline = CubicSpline(ks, psis, bc_type="natural")
    spread_by_k = {k: max(spread, SPREAD_FLOOR) for k in range(K_MIN, K_MAX + 1)}
    return VirtualParticipant(
        psi_spline=spline,
        source_curve=curve,
        spread_by_k=spread_by_k,
        guess=guess,
        lapse=lapse,
        seed=seed,
    )


def respond(vp: VirtualParticipant, params: StimulusParams) -> bool:
    """Bernoulli draw from the participant's seeded stream (call-order
    reproducible)."""
    return bool(vp._rng.random() < vp.p_pass(params))


def radical_inverse(index: int, base: int) -> float:
    f, r = 1.0, 0.0
    i = index
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


def halton_point(index: int) -> tuple[float, float]:
    """Continuous native-unit (L, K) from the base-2/base-3 Halton pair."""
    if index < 1:
        raise DomainError("Halton index starts at 1")
    u = radical_inverse(index, 2)
    v = radical_inverse(index, 3)
    return (L_MIN + u * (L_MAX - L_MIN), K_MIN + v * (K_MAX - K_MIN))


def curve_rmse(estimate: ThresholdCurve, truth: ThresholdCurve) -> float:
    """RMSE over integer K; truth-present K with an absent estimate incur
    the fixed half-width penalty."""
    residuals = []
    for k in range(K_MIN, K_MAX + 1):
        t = truth.psi_by_k.get(k)
        if t is None:
            continue
        e = estimate.psi_by_k.get(k)
        residuals.append(ABSENT_PENALTY if e is None else e - t)
    if not residuals:
        raise DomainError("no comparable K values between curves")
    return float(np.sqrt(np.mean(np.square(residuals))))


@dataclass
class PolicyRun:
    policy: Policy
    participant_seed: int
    samples: list  # TrialOutcome
    rmse_by_step: dict  # step (1-based trial count) -> rmse
    band_lo: dict  # step -> ThresholdCurve at the 0.3 level
    band_hi: dict  # step -> ThresholdCurve at the 0.7 level
    final_curve: Optional[ThresholdCurve] = None

    def to_dict(self) -> dict:
        return {
            "policy": self.policy.value,
            "participant_seed": self.participant_seed,
            "samples": [o.to_dict() for o in self.samples],
            "rmse_by_step": {str(s): v for s, v in self.rmse_by_step.items()},
            "band_lo": {str(s): c.to_dict() for s, c in self.band_lo.items()},
            "band_hi": {str(s): c.to_dict() for s, c in self.band_hi.items()},
            "final_curve": self.final_curve.to_dict() if self.final_curve else None,
        }


class _StaircaseScheduler:
    """One-up/one-down staircases at K = 1..8 taken one trial at a time in
    cycling order; terminated staircases are skipped, and when all eight
    have terminated the bank resets and the cycle restarts at K = 1."""

    def __init__(self):
        self._states = {k: StaircaseState(fixed_k=k) for k in range(K_MIN, K_MAX + 1)}
        self._cursor = K_MIN

    def _advance_cursor(self):
        if all(s.terminated for s in self._states.values()):
            self._states = {k: StaircaseState(fixed_k=k) for k in range(K_MIN, K_MAX + 1)}
            self._cursor = K_MIN
            return
        while self._states[self._cursor].terminated:
            self._cursor = K_MIN + (self._cursor - K_MIN + 1) % (K_MAX - K_MIN + 1)

    def next_params(self) -> StimulusParams:
        self._advance_cursor()
        return self._states[self._cursor].current_params

    def record(self, passed: bool):
        k = self._cursor
        self._states[k] = staircase_step(self._states[k], passed)
        self._cursor = K_MIN + (k - K_MIN + 1) % (K_MAX - K_MIN + 1)


def run_policy(
    vp: VirtualParticipant,
    policy: Policy,
    budget: int,
    constraints: Optional[FeasibilityConstraints] = None,
    config: GPConfig = GPConfig(),
    grid_spec: GridSpec = GridSpec(),
    track_bands: bool = False,
) -> PolicyRun:
    """Primers, then per-policy selection to the budget; the GP refits
    online after every outcome and the 50% isocontour is re-extracted.

    Deterministic given (participant seed, policy, budget, config).
    """
    if budget < 3:
        raise DomainError("budget must be at least 3 (two primers + one sample)")
    if constraints is None:
        constraints = FeasibilityConstraints()
    truth = vp.truth_curve()

    outcomes: list[TrialOutcome] = []
    for p in primer_sequence():
        outcomes.append(TrialOutcome(p, respond(vp, p), False, len(outcomes)))
    state = fit(outcomes, config)

    halton_idx = 0
    scheduler = _StaircaseScheduler() if policy is Policy.INDEPENDENT_STAIRCASE else None

    rmse_by_step: dict[int, float] = {}
    bands_lo: dict[int, ThresholdCurve] = {}
    bands_hi: dict[int, ThresholdCurve] = {}
    grid = None
    for step in range(3, budget + 1):
        if policy is Policy.ACTIVE:
            grid = predict_grid(state, grid_spec)
            params = propose_next(grid, outcomes, constraints)
        elif policy is Policy.HALTON:
            halton_idx += 1
            params = snap_to_feasible(halton_point(halton_idx), constraints, [])
        else:
            params = scheduler.next_params()
        passed = respond(vp, params)
        if scheduler is not None:
            scheduler.record(passed)
        outcome = TrialOutcome(params, passed, False, len(outcomes))
        outcomes.append(outcome)
        state = update_online(state, outcome, config)
        grid = predict_grid(state, grid_spec)
        est = extract_isocontour(grid)
        rmse_by_step[step] = curve_rmse(est, truth)
        if track_bands:
            lo, hi = band_curves(grid)
            bands_lo[step] = lo
            bands_hi[step] = hi

    final_curve = extract_isocontour(grid) if grid is not None else None
    return PolicyRun(
        policy=policy,
        participant_seed=vp.seed,
        samples=outcomes,
        rmse_by_step=rmse_by_step,
        band_lo=bands_lo,
        band_hi=bands_hi,
        final_curve=final_curve,
    )


# truth crossings closer than this to the K <= L wedge edge are dropped:
# the feasible approach region there is too narrow for any sampling policy
# to resolve, and guess/lapse asymmetry shifts the observable 50% crossing
# below the truth crossing, so the margin must also absorb that offset
EDGE_MARGIN = 2.5


def synthetic_cohort(n: int, seed: int = 0, **vp_kwargs) -> list[VirtualParticipant]:
    """Cohort of participants with randomized decreasing psi(K) curves and
    individualized response nuisance parameters (guess, lapse, spread).

    Keyword arguments override the per-participant nuisance draws (e.g.
    ``guess=0.0, lapse=0.0`` for a noiseless cohort sharing the same truth
    curves).
    """
    rng = np.random.default_rng(seed)
    cohort = []
    for i in range(n):
        psi1 = rng.uniform(6.0, 14.0)
        slope = rng.uniform(0.3, 1.1)
        wiggle = rng.normal(0.0, 0.3, K_MAX)
        nuisance = {
            "guess": rng.uniform(0.0, 0.05),
            "lapse": rng.uniform(0.1, 0.3),
            "spread": rng.uniform(1.0, 2.5),
        }
        nuisance.update(vp_kwargs)
        psi_by_k = {}
        for k in range(K_MIN, K_MAX + 1):
            psi = float(np.clip(psi1 - slope * (k - 1) + wiggle[k - 1], 2.0, 16.0))
            # crossings below L = K lie outside the task-feasible wedge;
            # the truth curve marks those K absent (no policy can see them)
            if psi >= k + EDGE_MARGIN:
                psi_by_k[k] = psi
        curve = ThresholdCurve(psi_by_k=psi_by_k)
        cohort.append(
            make_virtual_participant(curve, seed=seed * 100_003 + i, **nuisance)
        )
    return cohort


def write_runs_csv(runs: Sequence[PolicyRun], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["participant_seed", "policy", "step", "rmse"])
        for run in runs:
            for step in sorted(run.rmse_by_step):
                w.writerow([run.participant_seed, run.policy.value, step, run.rmse_by_step[step]])


def write_aggregate_csv(runs: Sequence[PolicyRun], path) -> None:
    """Per-policy mean and SD of RMSE at each step (plot-ready)."""
    by_policy_step: dict = {}
    for run in runs:
        for step, v in run.rmse_by_step.items():
            by_policy_step.setdefault((run.policy.value, step), []).append(v)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", "step", "mean_rmse", "sd_rmse", "n"])
        for (pol, step), vals in sorted(by_policy_step.items()):
            arr = np.asarray(vals)
            sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
            w.writerow([pol, step, float(arr.mean()), sd, len(arr)])


def write_run_json(run: PolicyRun, path) -> None:
    Path(path).write_text(json.dumps(run.to_dict(), indent=2))
