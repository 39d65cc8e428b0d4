"""Next-stimulus selection: fixed primers, then maximum predictive entropy
on the dense grid with distance-based tie-breaking, feasibility snapping
and the +2 step cap."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .domain import (
    ConfigurationError,
    FeasibilityConstraints,
    StimulusParams,
    TrialOutcome,
    scale_k,
    scale_l,
    snap_to_feasible,
)
from .gp import PosteriorGrid

# entropy values within this of the maximum count as tied
TIE_TOLERANCE = 1e-9
# a proposal may repeat the immediately preceding trial only when no other
# feasible point has entropy this close to the maximum
ANTI_REPEAT_TOLERANCE = 1e-6


def primer_sequence() -> list[StimulusParams]:
    """The two non-adaptive primer trials opening every adaptive session."""
    return [StimulusParams(1, 1), StimulusParams(3, 3)]


def cap_history(outcomes: Sequence[TrialOutcome]) -> list[StimulusParams]:
    """Points that count toward the step-cap maxima.

    Real trials always count. Phantoms count only when they sit at
    feasible task coordinates (primer-encoding phantoms); boundary or
    standardization phantoms elsewhere do not model difficulty the
    participant actually experienced.
    """
    out = []
    for o in outcomes:
        if not o.phantom or o.params.is_feasible:
            out.append(o.params)
    return out


def propose_next(
    grid: PosteriorGrid,
    history: Sequence[TrialOutcome],
    constraints: FeasibilityConstraints,
) -> StimulusParams:
    """Pick the next stimulus from a posterior grid.

    The candidate is the entropy argmax over grid points inside the mask;
    near-ties prefer the point farthest (max-min scaled distance) from
    previously observed non-phantom samples. The winner is snapped to the
    feasible integer lattice under the step cap. A snapped result equal to
    the immediately preceding trial is passed over while comparably
    informative alternatives exist.
    """
    ll, kk = np.meshgrid(grid.l_axis, grid.k_axis, indexing="ij")
    l_flat, k_flat = ll.ravel(), kk.ravel()
    feasible = constraints.contains_many(l_flat, k_flat)
    if not feasible.any():
        raise ConfigurationError("no grid point lies inside the constraint mask")

    ent = grid.entropy.ravel().copy()
    ent[~feasible] = -np.inf
    max_ent = ent.max()
    if not np.isfinite(max_ent):
        raise ConfigurationError("entropy undefined on the feasible grid")

    real_pts = np.array(
        [[scale_l(o.params.L), scale_k(o.params.K)] for o in history if not o.phantom],
        dtype=float,
    )
    cand_xy = np.column_stack([scale_l(l_flat), scale_k(k_flat)])
    if len(real_pts):
        d2 = ((cand_xy[:, None, :] - real_pts[None, :, :]) ** 2).sum(axis=2)
        min_dist = np.sqrt(d2.min(axis=1))
    else:
        min_dist = np.zeros(len(cand_xy))

    near = np.flatnonzero(ent >= max_ent - ANTI_REPEAT_TOLERANCE)
    # deterministic preference order: entropy, then spread, then lexicographic
    order = near[np.lexsort((k_flat[near], l_flat[near], -min_dist[near], -ent[near]))]

    cap_pts = cap_history(history)
    last_real = next((o.params for o in reversed(list(history)) if not o.phantom), None)

    first_choice: Optional[StimulusParams] = None
    for idx in order:
        snapped = snap_to_feasible((l_flat[idx], k_flat[idx]), constraints, cap_pts)
        if first_choice is None:
            first_choice = snapped
        if last_real is not None and snapped == last_real:
            continue
        return snapped
    # every near-maximal candidate snaps onto the previous trial
    return first_choice
