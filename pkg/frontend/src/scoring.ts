/** Build-phase scoring: exact-match pass rule and per-cell accuracy. */

import { N_CELLS, PatternSpec } from './types.js';

export interface BuildScore {
  passed: boolean;
  accuracy: number;
}

/** Empty 25-cell build (all cells unplaced). */
export function emptyBuild(): number[] {
  return new Array(N_CELLS).fill(-1);
}

/**
 * Required tile count per color index for a pattern (drives the palette
 * inventory in the build phase; placements beyond a color's count are
 * rejected at input time).
 */
export function colorCounts(pattern: PatternSpec): Map<number, number> {
  const counts = new Map<number, number>();
  for (const color of pattern.cells) {
    if (color >= 0) counts.set(color, (counts.get(color) ?? 0) + 1);
  }
  return counts;
}

/**
 * Score a submitted build against the target pattern.
 *
 * A pass requires the placement to equal the target on every cell —
 * both spatial configuration and color assignment. Accuracy is the
 * fraction of the target's occupied cells matched in both position and
 * color (extra placements on empty cells break the pass but do not
 * subtract from accuracy).
 */
export function scoreBuild(placed: number[], target: PatternSpec): BuildScore {
  if (placed.length !== N_CELLS || target.cells.length !== N_CELLS) {
    throw new Error(`builds must cover all ${N_CELLS} cells`);
  }
  let occupied = 0;
  let matched = 0;
  let exact = true;
  for (let i = 0; i < N_CELLS; i++) {
    const want = target.cells[i]!;
    const got = placed[i]!;
    if (want !== got) exact = false;
    if (want >= 0) {
      occupied += 1;
      if (got === want) matched += 1;
    }
  }
  return { passed: exact, accuracy: occupied === 0 ? 0 : matched / occupied };
}
