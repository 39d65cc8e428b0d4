"""Procedural generation of standardized colored 5x5 patterns.

Layouts are single 8-connected clusters grown from a random seed cell,
with mirror-symmetric layouts rejected. Each layout gets a spatial-entropy
score (spread vs. clumping blend) and each coloring a color-mix ratio;
the emitted pattern for a given (L, K) sits closest to the joint 50th
percentile of both scores within its sampled pool.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .domain import DomainError, StimulusParams

GRID = 5
N_CELLS = GRID * GRID

# Fixed ordered palette; colorings for binding load K use the first K hues.
PALETTE = ("red", "orange", "yellow", "lime", "lightblue", "purple", "pink", "white")

_NEIGH8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _neighbors8(r: int, c: int):
    for dr, dc in _NEIGH8:
        rr, cc = r + dr, c + dc
        if 0 <= rr < GRID and 0 <= cc < GRID:
            yield rr, cc


Cell = tuple[int, int]


@dataclass(frozen=True)
class GridLayout:
    occupied: frozenset

    def __post_init__(self):
        object.__setattr__(self, "occupied", frozenset(self.occupied))

    def sorted_cells(self) -> list[Cell]:
        return sorted(self.occupied)

    @property
    def size(self) -> int:
        return len(self.occupied)


@dataclass(frozen=True)
class PatternSpec:
    layout: GridLayout
    coloring: dict  # cell -> color index 0..7
    spatial_entropy: float
    color_mix_ratio: float
    percentile_spatial: float
    percentile_color: float
    seed: int

    def cells_row_major(self) -> list[int]:
        out = [-1] * N_CELLS
        for (r, c), color in self.coloring.items():
            out[r * GRID + c] = int(color)
        return out

    def to_dict(self) -> dict:
        return {
            "cells": self.cells_row_major(),
            "spatial_entropy": self.spatial_entropy,
            "color_mix_ratio": self.color_mix_ratio,
            "percentile_spatial": self.percentile_spatial,
            "percentile_color": self.percentile_color,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatternSpec":
        coloring = {}
        for i, color in enumerate(d["cells"]):
            if color >= 0:
                coloring[(i // GRID, i % GRID)] = int(color)
        return cls(
            layout=GridLayout(frozenset(coloring)),
            coloring=coloring,
            spatial_entropy=float(d["spatial_entropy"]),
            color_mix_ratio=float(d["color_mix_ratio"]),
            percentile_spatial=float(d["percentile_spatial"]),
            percentile_color=float(d["percentile_color"]),
            seed=int(d["seed"]),
        )


# ---------------------------------------------------------------------------
# layout generation and predicates

def is_connected8(cells: frozenset) -> bool:
    """Flood-fill 8-connectivity check (independent of the grower)."""
    if not cells:
        return False
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        r, c = stack.pop()
        for nb in _neighbors8(r, c):
            if nb in cells and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(cells)


def _reflections(cells: frozenset):
    yield frozenset((r, GRID - 1 - c) for r, c in cells)       # vertical axis
    yield frozenset((GRID - 1 - r, c) for r, c in cells)       # horizontal axis
    yield frozenset((c, r) for r, c in cells)                  # main diagonal
    yield frozenset((GRID - 1 - c, GRID - 1 - r) for r, c in cells)  # anti-diagonal


def is_symmetric(cells: frozenset) -> bool:
    return any(ref == cells for ref in _reflections(cells))


# Every 1-cell and the full 25-cell layout is symmetric; the filter is
# waived there.
SYMMETRY_WAIVED_SIZES = {1, N_CELLS}

_MAX_GROW_TRIES = 10_000


def grow_cluster(L: int, rng: np.random.Generator) -> GridLayout:
    """Grow a single 8-connected cluster of exactly L cells.

    Retries until the symmetry filter passes (except for waived sizes).
    """
    if not (1 <= L <= N_CELLS):
        raise DomainError(f"cluster size {L} outside [1, {N_CELLS}]")
    for _ in range(_MAX_GROW_TRIES):
        seed_cell = (int(rng.integers(GRID)), int(rng.integers(GRID)))
        cells = {seed_cell}
        frontier = set(_neighbors8(*seed_cell))
        while len(cells) < L:
            pick = sorted(frontier)[int(rng.integers(len(frontier)))]
            cells.add(pick)
            frontier.discard(pick)
            frontier.update(nb for nb in _neighbors8(*pick) if nb not in cells)
        cells = frozenset(cells)
        if L in SYMMETRY_WAIVED_SIZES or not is_symmetric(cells):
            return GridLayout(cells)
    raise DomainError(f"could not grow an asymmetric layout of size {L}")


# ---------------------------------------------------------------------------
# scoring

def _mean_pairwise_manhattan(cells: list[Cell]) -> float:
    n = len(cells)
    if n < 2:
        return 0.0
    total = 0
    for i in range(n):
        for j in range(i + 1, n):
            total += abs(cells[i][0] - cells[j][0]) + abs(cells[i][1] - cells[j][1])
    return total / (n * (n - 1) / 2)


def _axis_score(counts: tuple) -> int:
    # sum over cell pairs of |pos_i - pos_j| along one axis, from per-line counts
    total = 0
    for p in range(GRID):
        for q in range(p + 1, GRID):
            total += counts[p] * counts[q] * (q - p)
    return total


def _gale_ryser(rows: tuple, cols: tuple) -> bool:
    """Existence of a 0/1 matrix with the given row/col sums."""
    a = sorted(rows, reverse=True)
    b = list(cols)
    if sum(a) != sum(b):
        return False
    for k in range(1, len(a) + 1):
        lhs = sum(a[:k])
        rhs = sum(min(x, k) for x in b)
        if lhs > rhs:
            return False
    return True


@lru_cache(maxsize=None)
def max_mean_pairwise_manhattan(L: int) -> float:
    """Maximum attainable mean pairwise Manhattan distance over all
    (possibly disconnected) L-cell placements on the 5x5 grid.

    Row and column contributions decouple; we maximize over realizable
    (row-count, column-count) multiset pairs, checked by Gale-Ryser, and
    take the best positional arrangement of each multiset.
    """
    if L < 2:
        return 1.0  # unused; avoids division by zero for L = 1

    def multisets():
        out = set()
        for comp in itertools.product(range(GRID + 1), repeat=GRID):
            if sum(comp) == L:
                out.add(tuple(sorted(comp, reverse=True)))
        return sorted(out)

    def best_arrangement(ms: tuple) -> int:
        return max(_axis_score(perm) for perm in set(itertools.permutations(ms)))

    mss = multisets()
    scores = {ms: best_arrangement(ms) for ms in mss}
    best = 0
    for rows_ms in mss:
        for cols_ms in mss:
            if _gale_ryser(rows_ms, cols_ms):
                val = scores[rows_ms] + scores[cols_ms]
                if val > best:
                    best = val
    return best / (L * (L - 1) / 2)


def clustering_coefficient(layout: GridLayout) -> float:
    """Mean over occupied cells of occupied-8-neighbors / in-grid-8-neighbors."""
    cells = layout.occupied
    if len(cells) < 2:
        return 0.0
    total = 0.0
    for r, c in cells:
        nbs = list(_neighbors8(r, c))
        occ = sum(1 for nb in nbs if nb in cells)
        total += occ / len(nbs)
    return total / len(cells)


def spatial_entropy(layout: GridLayout, weight: float = 0.5) -> float:
    """Blend of normalized spread and one minus local clumping, in [0, 1].

    weight is the share given to the spread term; the single-cell layout
    defines both components as zero.
    """
    L = layout.size
    if L < 1:
        raise DomainError("empty layout")
    # L == 1 falls out of the general formulas: D_norm = 0 and C = 0
    d_norm = _mean_pairwise_manhattan(layout.sorted_cells()) / max_mean_pairwise_manhattan(L)
    c = clustering_coefficient(layout)
    return weight * d_norm + (1.0 - weight) * (1.0 - c)


def color_mix_ratio(layout: GridLayout, coloring: dict) -> float:
    """Fraction of 8-adjacent occupied pairs whose colors differ."""
    cells = layout.sorted_cells()
    total = 0
    diff = 0
    index = set(cells)
    for r, c in cells:
        for nb in _neighbors8(r, c):
            if nb in index and nb > (r, c):
                total += 1
                if coloring[nb] != coloring[(r, c)]:
                    diff += 1
    if total == 0:
        return 0.0
    return diff / total


# ---------------------------------------------------------------------------
# colorings

def color_counts(L: int, K: int) -> list[int]:
    """Per-color tile counts: as even as possible, first colors get the
    remainder."""
    base, rem = divmod(L, K)
    return [base + 1 if i < rem else base for i in range(K)]


def _color_multiset(L: int, K: int) -> list[int]:
    out = []
    for color, count in enumerate(color_counts(L, K)):
        out.extend([color] * count)
    return out


def shuffled_coloring(layout: GridLayout, K: int, rng: np.random.Generator) -> dict:
    cells = layout.sorted_cells()
    colors = _color_multiset(len(cells), K)
    perm = rng.permutation(len(colors))
    return {cell: colors[perm[i]] for i, cell in enumerate(cells)}


def contiguous_coloring(layout: GridLayout, K: int, rng: np.random.Generator) -> dict:
    """Coloring that grows spatially contiguous same-color regions: cells
    are ordered by a breadth-first walk and colors assigned in blocks."""
    cells = layout.sorted_cells()
    start = cells[int(rng.integers(len(cells)))]
    index = set(cells)
    order = [start]
    seen = {start}
    queue = [start]
    while queue:
        r, c = queue.pop(0)
        for nb in sorted(_neighbors8(r, c)):
            if nb in index and nb not in seen:
                seen.add(nb)
                order.append(nb)
                queue.append(nb)
    colors = _color_multiset(len(cells), K)
    return {cell: colors[i] for i, cell in enumerate(order)}


# ---------------------------------------------------------------------------
# selection

def _midpoint_percentile(value: float, pool: np.ndarray) -> float:
    less = np.count_nonzero(pool < value - 1e-12)
    equal = np.count_nonzero(np.abs(pool - value) <= 1e-12)
    return 100.0 * (less + 0.5 * equal) / len(pool)


@dataclass(frozen=True)
class _Candidate:
    layout: GridLayout
    coloring: dict
    s_score: float
    c_score: float


def select_pattern(
    params: StimulusParams,
    candidates: list[_Candidate],
    seed: int,
    entropy_weight: float = 0.5,
) -> PatternSpec:
    """Pick the candidate closest to the joint 50th percentile of both
    scores within the supplied pool."""
    # spatial percentiles rank grown layouts; color percentiles rank all colorings
    layout_scores: dict[int, float] = {}
    for c in candidates:
        layout_scores.setdefault(id(c.layout), c.s_score)
    s_pool = np.array(list(layout_scores.values()))
    c_pool = np.array([c.c_score for c in candidates])

    best = None
    best_key = None
    for i, cand in enumerate(candidates):
        p_s = _midpoint_percentile(cand.s_score, s_pool)
        p_c = _midpoint_percentile(cand.c_score, c_pool)
        key = (abs(p_s - 50.0) + abs(p_c - 50.0), i)
        if best_key is None or key < best_key:
            best_key = key
            best = (cand, p_s, p_c)
    cand, p_s, p_c = best
    return PatternSpec(
        layout=cand.layout,
        coloring=dict(cand.coloring),
        spatial_entropy=cand.s_score,
        color_mix_ratio=cand.c_score,
        percentile_spatial=p_s,
        percentile_color=p_c,
        seed=seed,
    )


def generate_standard_pattern(
    params: StimulusParams,
    seed: int,
    pool_size: int = 500,
    shuffles_per_layout: int = 20,
    entropy_weight: float = 0.5,
) -> PatternSpec:
    """Deterministically generate the standardized pattern for (L, K).

    pool_size layouts are grown (symmetry-filtered); each receives
    shuffles_per_layout random colorings plus one contiguous-region
    coloring. Identical (params, seed, pool_size) always reproduce the
    same pattern.
    """
    if not params.is_feasible:
        raise DomainError(f"infeasible stimulus {params}")
    if pool_size < 1:
        raise DomainError("pool_size must be positive")
    L, K = params.L, params.K

    if L == 1:
        # one occupied cell: canonical center placement, color 0
        layout = GridLayout(frozenset({(2, 2)}))
        coloring = {(2, 2): 0}
        return PatternSpec(
            layout=layout,
            coloring=coloring,
            spatial_entropy=spatial_entropy(layout, entropy_weight),
            color_mix_ratio=0.0,
            percentile_spatial=50.0,
            percentile_color=50.0,
            seed=seed,
        )

    rng = np.random.default_rng([seed, L, K, pool_size])
    candidates: list[_Candidate] = []
    for _ in range(pool_size):
        layout = grow_cluster(L, rng)
        s_score = spatial_entropy(layout, entropy_weight)
        colorings = [shuffled_coloring(layout, K, rng) for _ in range(shuffles_per_layout)]
        colorings.append(contiguous_coloring(layout, K, rng))
        for coloring in colorings:
            candidates.append(
                _Candidate(layout, coloring, s_score, color_mix_ratio(layout, coloring))
            )
    return select_pattern(params, candidates, seed, entropy_weight)
