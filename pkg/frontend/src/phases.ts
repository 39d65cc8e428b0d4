/**
 * Trial phase state machine: Preparation -> Observation -> Build ->
 * Feedback, strictly in that order, driven by timers and user events.
 *
 * Observation reveals one tile per interaction for revealMs, then the
 * tile goes dark again; the phase ends at observationMsPerTile * L or as
 * soon as every occupied tile has been revealed, whichever comes first.
 * Build ends on submission or at buildMs (an expiry scores the current,
 * possibly empty, placement).
 */

import { scoreBuild, BuildScore } from './scoring.js';
import { DEFAULT_PHASES, PatternSpec, Phase, PhaseConfig } from './types.js';

export interface PhaseEvent {
  phase: Phase;
  at: number; // ms timestamp
}

export interface TrialResult extends BuildScore {
  phaseLog: PhaseEvent[];
}

export interface TrialHooks {
  onPhase?: (phase: Phase) => void;
  onTileRevealed?: (cell: number, color: number) => void;
  onTileHidden?: (cell: number) => void;
}

type Timer = ReturnType<typeof setTimeout>;

export class TrialRunner {
  readonly done: Promise<TrialResult>;

  private phase: Phase = 'preparation';
  private started = false;
  private readonly revealed = new Set<number>();
  private readonly occupiedCount: number;
  private readonly timers = new Set<Timer>();
  private placed: number[] | null = null;
  private score: BuildScore = { passed: false, accuracy: 0 };
  private readonly phaseLog: PhaseEvent[] = [];
  private resolveDone!: (result: TrialResult) => void;

  constructor(
    private readonly pattern: PatternSpec,
    private readonly config: PhaseConfig = DEFAULT_PHASES,
    private readonly hooks: TrialHooks = {},
  ) {
    this.occupiedCount = pattern.cells.filter((c) => c >= 0).length;
    if (this.occupiedCount === 0) throw new Error('pattern has no occupied cells');
    this.done = new Promise((resolve) => {
      this.resolveDone = resolve;
    });
  }

  currentPhase(): Phase {
    return this.phase;
  }

  start(): void {
    if (this.started) throw new Error('trial already started');
    this.started = true;
    this.enter('preparation');
    this.after(this.config.preparationMs, () => this.enterObservation());
  }

  /**
   * Observation-phase interaction. No-op outside the observation phase,
   * on empty cells, and on tiles already revealed.
   */
  revealTile(cell: number): void {
    if (this.phase !== 'observation') return;
    const color = this.pattern.cells[cell];
    if (color === undefined || color < 0 || this.revealed.has(cell)) return;
    this.revealed.add(cell);
    this.hooks.onTileRevealed?.(cell, color);
    this.after(this.config.revealMs, () => this.hooks.onTileHidden?.(cell));
    if (this.revealed.size === this.occupiedCount) {
      // all tiles seen: the phase ends now, not at the deadline
      this.enterBuild();
    }
  }

  /** Build-phase submission; placements arrive as a 25-cell color array. */
  submitBuild(placed: number[]): void {
    if (this.phase !== 'build') {
      throw new Error(`cannot submit during ${this.phase} phase`);
    }
    this.placed = placed;
    this.enterFeedback();
  }

  /** Cancel all pending timers (e.g. on session abort). */
  dispose(): void {
    for (const t of this.timers) clearTimeout(t);
    this.timers.clear();
  }

  private enter(phase: Phase): void {
    this.dispose();
    this.phase = phase;
    this.phaseLog.push({ phase, at: Date.now() });
    this.hooks.onPhase?.(phase);
  }

  private enterObservation(): void {
    this.enter('observation');
    this.after(this.config.observationMsPerTile * this.occupiedCount, () =>
      this.enterBuild(),
    );
  }

  private enterBuild(): void {
    this.enter('build');
    this.after(this.config.buildMs, () => {
      // timer expiry scores whatever is placed so far (nothing, headlessly)
      this.placed = this.placed ?? new Array(this.pattern.cells.length).fill(-1);
      this.enterFeedback();
    });
  }

  private enterFeedback(): void {
    this.score = scoreBuild(
      this.placed ?? new Array(this.pattern.cells.length).fill(-1),
      this.pattern,
    );
    this.enter('feedback');
    this.after(this.config.feedbackMs, () => {
      this.enter('done');
      this.resolveDone({ ...this.score, phaseLog: [...this.phaseLog] });
    });
  }

  private after(ms: number, fn: () => void): void {
    const t = setTimeout(() => {
      this.timers.delete(t);
      fn();
    }, ms);
    this.timers.add(t);
  }
}
