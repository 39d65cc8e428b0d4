/** JSON contracts shared with the session service, plus client-side config. */

export const GRID = 5;
export const N_CELLS = GRID * GRID;

/** Fixed palette; color index i in a pattern maps to PALETTE[i]. */
export const PALETTE = [
  '#e23b3b', // red
  '#f08a2c', // orange
  '#f2d43c', // yellow
  '#6fd43a', // lime
  '#7ec8ef', // light blue
  '#9a4fd4', // purple
  '#ef7ec2', // pink
  '#f5f5f5', // white
] as const;

export interface StimulusParams {
  L: number;
  K: number;
}

export function sameParams(a: StimulusParams, b: StimulusParams): boolean {
  return a.L === b.L && a.K === b.K;
}

/**
 * Standardized pattern payload from GET /patterns: a 25-cell row-major
 * array where empty cells are -1 and occupied cells carry a color index.
 */
export interface PatternSpec {
  cells: number[];
  spatial_entropy: number;
  color_mix_ratio: number;
  percentile_spatial: number;
  percentile_color: number;
  seed: number;
}

export interface CurvePoint {
  K: number;
  psi: number | null;
  present: boolean;
}

export interface ThresholdCurve {
  source: string;
  level: number;
  points: CurvePoint[];
}

export interface PosteriorGrid {
  L_axis: number[];
  K_axis: number[];
  p: number[][];
  entropy: number[][];
}

export interface CreateSessionResponse {
  session_id: string;
  status: string;
  first_recommendation: StimulusParams;
}

export interface OutcomeResponse {
  terminated?: boolean;
  next?: StimulusParams;
  trials?: number;
  curve?: ThresholdCurve;
  reason?: string;
  threshold?: { psi_theta: number; slope: number; capped: boolean; degenerate: boolean };
}

export interface PosteriorResponse {
  grid: PosteriorGrid;
  curve?: ThresholdCurve;
}

export type Phase = 'preparation' | 'observation' | 'build' | 'feedback' | 'done';

export interface PhaseConfig {
  /** Fixed lead-in before the pattern can be explored. */
  preparationMs: number;
  /** Observation budget per occupied tile; total deadline is this times L. */
  observationMsPerTile: number;
  /** How long a revealed tile's color stays visible. */
  revealMs: number;
  /** Build-phase timer; submission or expiry ends the phase. */
  buildMs: number;
  /** Feedback display time. */
  feedbackMs: number;
}

export const DEFAULT_PHASES: PhaseConfig = {
  preparationMs: 2000,
  observationMsPerTile: 5000,
  revealMs: 1000,
  buildMs: 60_000,
  feedbackMs: 3000,
};
