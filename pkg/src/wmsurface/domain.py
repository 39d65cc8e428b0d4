"""Shared domain vocabulary: difficulty points, trial outcomes, feasibility
constraints and session records.

The difficulty domain has two integer axes: spatial load L (occupied tiles,
1..16) and feature-binding load K (distinct colors, 1..8). Internally all
numerics run on [0, 1]-scaled coordinates; everything in this module speaks
native units.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon

L_MIN, L_MAX = 1, 16
K_MIN, K_MAX = 1, 8

# Tolerance used when testing polygon membership so that boundary points
# (e.g. the K == L edge) are always included despite float rounding.
_MASK_EPS = 1e-9


class DomainError(ValueError):
    """Invalid value for a domain type."""


class ConfigurationError(ValueError):
    """Constraints leave no feasible point, or are otherwise unusable."""


def scale_l(l):
    return (np.asarray(l, dtype=float) - L_MIN) / (L_MAX - L_MIN)


def scale_k(k):
    return (np.asarray(k, dtype=float) - K_MIN) / (K_MAX - K_MIN)


def unscale_l(x):
    return np.asarray(x, dtype=float) * (L_MAX - L_MIN) + L_MIN


def unscale_k(x):
    return np.asarray(x, dtype=float) * (K_MAX - K_MIN) + K_MIN


class Mode(str, Enum):
    ADAPTIVE = "adaptive"
    CLASSIC = "classic"


@dataclass(frozen=True, order=True)
class StimulusParams:
    """One point (L, K) in the difficulty domain.

    Bounds are enforced at construction. Feasibility (K <= L) is a property
    of the task's constraint mask, not of the type: the classic staircase
    legitimately presents e.g. (1, 3), where the realized stimulus simply
    uses fewer colors than K.
    """

    L: int
    K: int

    def __post_init__(self):
        if not (isinstance(self.L, (int, np.integer)) and isinstance(self.K, (int, np.integer))):
            raise DomainError(f"L and K must be integers, got ({self.L!r}, {self.K!r})")
        if not (L_MIN <= self.L <= L_MAX):
            raise DomainError(f"L={self.L} outside [{L_MIN}, {L_MAX}]")
        if not (K_MIN <= self.K <= K_MAX):
            raise DomainError(f"K={self.K} outside [{K_MIN}, {K_MAX}]")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "K", int(self.K))

    @property
    def is_feasible(self) -> bool:
        return self.K <= self.L

    def scaled(self) -> tuple[float, float]:
        return (float(scale_l(self.L)), float(scale_k(self.K)))

    def to_dict(self) -> dict:
        return {"L": self.L, "K": self.K}

    @classmethod
    def from_dict(cls, d: dict) -> "StimulusParams":
        return cls(int(d["L"]), int(d["K"]))


@dataclass(frozen=True)
class TrialOutcome:
    """A labeled observation: real trial or synthetic (phantom) point."""

    params: StimulusParams
    passed: bool
    phantom: bool = False
    index: int = 0

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "passed": self.passed,
            "phantom": self.phantom,
            "index": self.index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialOutcome":
        return cls(
            params=StimulusParams.from_dict(d["params"]),
            passed=bool(d["passed"]),
            phantom=bool(d.get("phantom", False)),
            index=int(d.get("index", 0)),
        )


def task_polygon() -> list[tuple[float, float]]:
    """Vertices of the K <= L inclusion region within the task bounds."""
    return [(L_MIN, K_MIN), (L_MAX, K_MIN), (L_MAX, K_MAX), (K_MAX, K_MAX)]


@dataclass
class FeasibilityConstraints:
    """Inclusion polygon, integer snapping and per-axis step cap.

    step_cap limits how far above the largest previously sampled value a
    new proposal may land on each axis; decreases are never restricted.
    """

    polygon_mask: list[tuple[float, float]] = field(default_factory=task_polygon)
    integer_snap: bool = True
    step_cap: int = 2
    bounds: tuple[tuple[int, int], tuple[int, int]] = ((L_MIN, L_MAX), (K_MIN, K_MAX))

    def __post_init__(self):
        if self.step_cap < 0:
            raise ConfigurationError(f"step_cap must be >= 0, got {self.step_cap}")
        if len(self.polygon_mask) < 3:
            raise ConfigurationError("polygon_mask needs at least 3 vertices")
        self._poly = Polygon(self.polygon_mask).buffer(_MASK_EPS)

    def contains(self, l: float, k: float) -> bool:
        (lo_l, hi_l), (lo_k, hi_k) = self.bounds
        if not (lo_l - _MASK_EPS <= l <= hi_l + _MASK_EPS):
            return False
        if not (lo_k - _MASK_EPS <= k <= hi_k + _MASK_EPS):
            return False
        return bool(shapely.contains_xy(self._poly, l, k))

    def contains_many(self, l: np.ndarray, k: np.ndarray) -> np.ndarray:
        (lo_l, hi_l), (lo_k, hi_k) = self.bounds
        inside = shapely.contains_xy(self._poly, l, k)
        inside &= (l >= lo_l - _MASK_EPS) & (l <= hi_l + _MASK_EPS)
        inside &= (k >= lo_k - _MASK_EPS) & (k <= hi_k + _MASK_EPS)
        return inside

    def feasible_lattice(self, history: Optional[Sequence[StimulusParams]] = None) -> list[StimulusParams]:
        """All integer points in the mask (and under the step cap, if a
        history is given)."""
        (lo_l, hi_l), (lo_k, hi_k) = self.bounds
        cap_l, cap_k = math.inf, math.inf
        if history:
            cap_l = max(p.L for p in history) + self.step_cap
            cap_k = max(p.K for p in history) + self.step_cap
        pts = []
        for l in range(int(math.ceil(lo_l)), int(hi_l) + 1):
            if l > cap_l:
                continue
            for k in range(int(math.ceil(lo_k)), int(hi_k) + 1):
                if k > cap_k:
                    continue
                if self.contains(l, k):
                    pts.append(StimulusParams(l, k))
        return pts

    def to_dict(self) -> dict:
        return {
            "polygon_mask": [list(v) for v in self.polygon_mask],
            "integer_snap": self.integer_snap,
            "step_cap": self.step_cap,
            "bounds": [list(self.bounds[0]), list(self.bounds[1])],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeasibilityConstraints":
        return cls(
            polygon_mask=[tuple(v) for v in d["polygon_mask"]],
            integer_snap=bool(d.get("integer_snap", True)),
            step_cap=int(d.get("step_cap", 2)),
            bounds=(tuple(d["bounds"][0]), tuple(d["bounds"][1])),
        )


def classic_constraints() -> FeasibilityConstraints:
    """Constraint set for the classic staircase: the K = 3 line, no cap."""
    return FeasibilityConstraints(
        polygon_mask=[(L_MIN, 2.5), (L_MAX, 2.5), (L_MAX, 3.5), (L_MIN, 3.5)],
        step_cap=L_MAX,
    )


def snap_to_feasible(
    point: tuple[float, float],
    constraints: FeasibilityConstraints,
    history: Sequence[StimulusParams],
) -> StimulusParams:
    """Snap a continuous (L, K) proposal onto the feasible integer lattice.

    The rounded point is returned unchanged when it already satisfies the
    mask, bounds and per-axis step cap relative to the history maxima.
    Otherwise the nearest feasible lattice point wins, measured by Euclidean
    distance in [0, 1]-scaled coordinates with ties broken by smaller L then
    smaller K. An empty history disables the cap (uncapped snapping).
    """
    l, k = float(point[0]), float(point[1])
    if not (math.isfinite(l) and math.isfinite(k)):
        raise DomainError(f"non-finite proposal {point!r}")

    lattice = constraints.feasible_lattice(history)
    if not lattice:
        raise ConfigurationError("constraints exclude every integer point")

    rounded_l = int(math.floor(l + 0.5))
    rounded_k = int(math.floor(k + 0.5))
    if history:
        cap_l = max(p.L for p in history) + constraints.step_cap
        cap_k = max(p.K for p in history) + constraints.step_cap
    else:
        cap_l, cap_k = L_MAX, K_MAX
    (lo_l, hi_l), (lo_k, hi_k) = constraints.bounds
    if (
        lo_l <= rounded_l <= min(hi_l, cap_l)
        and lo_k <= rounded_k <= min(hi_k, cap_k)
        and constraints.contains(rounded_l, rounded_k)
    ):
        return StimulusParams(rounded_l, rounded_k)

    sl, sk = float(scale_l(l)), float(scale_k(k))
    best = min(
        lattice,
        key=lambda p: (
            (float(scale_l(p.L)) - sl) ** 2 + (float(scale_k(p.K)) - sk) ** 2,
            p.L,
            p.K,
        ),
    )
    return best


@dataclass
class SessionRecord:
    """Full audit trail for one session: trials, phantoms, constraints,
    seed, and (for adaptive sessions) posterior grids and hyperparameters
    at close."""

    session_id: str
    mode: Mode
    seed: int
    constraints: FeasibilityConstraints
    outcomes: list[TrialOutcome] = field(default_factory=list)
    posterior_snapshots: list[dict] = field(default_factory=list)
    hyperparameters: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "mode": self.mode.value,
            "seed": self.seed,
            "constraints": self.constraints.to_dict(),
            "outcomes": [o.to_dict() for o in self.outcomes],
            "posterior_snapshots": list(self.posterior_snapshots),
            "hyperparameters": self.hyperparameters,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "SessionRecord":
        return cls(
            session_id=d["session_id"],
            mode=Mode(d["mode"]),
            seed=int(d["seed"]),
            constraints=FeasibilityConstraints.from_dict(d["constraints"]),
            outcomes=[TrialOutcome.from_dict(o) for o in d["outcomes"]],
            posterior_snapshots=list(d.get("posterior_snapshots") or []),
            hyperparameters=d.get("hyperparameters"),
        )

    @classmethod
    def from_json(cls, s: str) -> "SessionRecord":
        return cls.from_dict(json.loads(s))
