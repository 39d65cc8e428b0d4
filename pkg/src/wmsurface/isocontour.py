"""Posterior standardization (boundary and monotonicity phantoms, single
refit) and extraction of performance isocontours from posterior grids."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .domain import (
    DomainError,
    FeasibilityConstraints,
    K_MAX,
    K_MIN,
    StimulusParams,
    TrialOutcome,
)
from .gp import GPConfig, GPModelState, GridSpec, PosteriorGrid, fit


class CurveSource(str, Enum):
    ADAPTIVE_POSTERIOR = "adaptive_posterior"
    CLASSIC_LOGISTIC = "classic_logistic"


@dataclass
class ThresholdCurve:
    """psi(K): L-value of the chosen probability crossing at each integer
    K, absent where no crossing exists."""

    psi_by_k: dict  # int -> float
    source: CurveSource = CurveSource.ADAPTIVE_POSTERIOR
    level: float = 0.5

    def at(self, k: int) -> Optional[float]:
        if not (K_MIN <= k <= K_MAX):
            raise DomainError(f"K={k} outside [{K_MIN}, {K_MAX}]")
        return self.psi_by_k.get(int(k))

    def to_dict(self) -> dict:
        return {
            "source": self.source.value,
            "level": self.level,
            "points": [
                {"K": k, "psi": self.psi_by_k.get(k), "present": k in self.psi_by_k}
                for k in range(K_MIN, K_MAX + 1)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdCurve":
        psi = {int(p["K"]): float(p["psi"]) for p in d["points"] if p["present"]}
        return cls(psi_by_k=psi, source=CurveSource(d["source"]), level=float(d.get("level", 0.5)))


# Fixed boundary phantoms anchoring the surface orientation at the domain
# corners: a pass at the easiest point, a fail at the hardest.
def default_boundary_phantoms() -> list[TrialOutcome]:
    return [
        TrialOutcome(StimulusParams(1, 1), True, phantom=True, index=-1),
        TrialOutcome(StimulusParams(16, 8), False, phantom=True, index=-2),
    ]


def monotonicity_phantoms(
    outcomes: Sequence[TrialOutcome], reading: str = "low_l"
) -> list[TrialOutcome]:
    """Positive phantoms for colors where observed passes outnumber fails.

    The default "low_l" reading places passes at every feasible L <= K*
    for such a color K* (under K <= L that is the single point (K*, K*)).
    The alternative "low_k" reading places passes at (K*, k) for every
    k <= K*.
    """
    tally: dict[int, list[int]] = {}
    for o in outcomes:
        if o.phantom:
            continue
        t = tally.setdefault(o.params.K, [0, 0])
        t[1 if o.passed else 0] += 1
    out = []
    idx = -10
    for k_star, (fails, passes) in sorted(tally.items()):
        if passes <= fails:
            continue
        if reading == "low_l":
            points = [StimulusParams(l, k_star) for l in range(1, k_star + 1) if k_star <= l]
        elif reading == "low_k":
            points = [StimulusParams(k_star, k) for k in range(1, k_star + 1)]
        else:
            raise DomainError(f"unknown monotonicity reading {reading!r}")
        for p in points:
            out.append(TrialOutcome(p, True, phantom=True, index=idx))
            idx -= 1
    return out


def standardize_posterior(
    outcomes: Sequence[TrialOutcome],
    constraints: FeasibilityConstraints,
    config: GPConfig = GPConfig(),
    boundary_phantoms: Optional[Sequence[TrialOutcome]] = None,
    monotonicity_reading: str = "low_l",
) -> GPModelState:
    """Single refit over observed samples plus the fixed boundary phantom
    set and data-driven monotonicity phantoms.

    Phantom insertion never alters an observed label and never duplicates
    a coordinate-label pair already in the data.
    """
    observed = [o for o in outcomes if not o.phantom]
    if not observed:
        raise DomainError("standardization requires at least one observed outcome")
    if boundary_phantoms is None:
        boundary_phantoms = default_boundary_phantoms()
    phantoms = list(boundary_phantoms) + monotonicity_phantoms(observed, monotonicity_reading)
    seen = {(o.params.L, o.params.K, o.passed) for o in observed}
    extra = []
    for ph in phantoms:
        key = (ph.params.L, ph.params.K, ph.passed)
        if key in seen:
            continue
        seen.add(key)
        extra.append(ph)
    return fit(list(observed) + extra, config)


def extract_isocontour(grid: PosteriorGrid, level: float = 0.5) -> ThresholdCurve:
    """First crossing of the level along L at each integer K, by linear
    interpolation between adjacent grid nodes.

    Integer-K slices are taken from the grid by linear interpolation along
    the K axis. Scanning starts at the lowest feasible L for that K
    (L = K under the binding constraint); the value is absent when p is
    already below the level there or never crosses.
    """
    curve = {}
    for k in range(K_MIN, K_MAX + 1):
        p_slice = _slice_at_k(grid, float(k))
        l_axis = grid.l_axis
        start = int(np.searchsorted(l_axis, k - 1e-9))
        crossing = None
        if p_slice[start] >= level:
            for i in range(start, len(l_axis) - 1):
                p0, p1 = p_slice[i], p_slice[i + 1]
                if p0 >= level > p1:
                    crossing = l_axis[i] + (p0 - level) / (p0 - p1) * (l_axis[i + 1] - l_axis[i])
                    break
        if crossing is not None:
            curve[k] = float(crossing)
    return ThresholdCurve(psi_by_k=curve, level=level)


def _slice_at_k(grid: PosteriorGrid, k: float) -> np.ndarray:
    k_axis = grid.k_axis
    j = int(np.clip(np.searchsorted(k_axis, k) - 1, 0, len(k_axis) - 2))
    k0, k1 = k_axis[j], k_axis[j + 1]
    if k1 == k0:
        return grid.p[:, j]
    t = np.clip((k - k0) / (k1 - k0), 0.0, 1.0)
    return (1.0 - t) * grid.p[:, j] + t * grid.p[:, j + 1]


def adaptive_threshold_at_k(curve: ThresholdCurve, k: int) -> Optional[float]:
    """Threshold read off the adaptive posterior curve; None marks a
    session for downstream validity exclusion."""
    return curve.at(k)


def band_curves(
    grid: PosteriorGrid, levels: tuple[float, float] = (0.3, 0.7)
) -> tuple[ThresholdCurve, ThresholdCurve]:
    """Isocontours at a pair of posterior levels (uncertainty band edges).

    For a posterior decreasing in L the low-level curve sits at higher L
    than the high-level curve: lo >= psi >= hi pointwise.
    """
    lo, hi = levels
    if not (0.0 < lo < hi < 1.0):
        raise DomainError(f"levels must satisfy 0 < lo < hi < 1, got {levels}")
    return extract_isocontour(grid, lo), extract_isocontour(grid, hi)
