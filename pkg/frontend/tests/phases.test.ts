import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { TrialRunner } from '../src/phases.js';
import { emptyBuild } from '../src/scoring.js';
import { PatternSpec, Phase, PhaseConfig } from '../src/types.js';

function pattern(occupied: number[], color = 0): PatternSpec {
  const cells = emptyBuild();
  occupied.forEach((cell) => (cells[cell] = color));
  return {
    cells,
    spatial_entropy: 0,
    color_mix_ratio: 0,
    percentile_spatial: 50,
    percentile_color: 50,
    seed: 0,
  };
}

const CONFIG: PhaseConfig = {
  preparationMs: 2000,
  observationMsPerTile: 5000,
  revealMs: 1000,
  buildMs: 60_000,
  feedbackMs: 3000,
};

describe('TrialRunner (simulated clock)', () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it('visits phases strictly in order', async () => {
    const phases: Phase[] = [];
    const runner = new TrialRunner(pattern([0, 1, 2, 3]), CONFIG, {
      onPhase: (p) => phases.push(p),
    });
    runner.start();
    await vi.runAllTimersAsync();
    expect(phases).toEqual(['preparation', 'observation', 'build', 'feedback', 'done']);
  });

  it('caps observation at 5 s per tile: L = 4 waits 20 s', () => {
    const runner = new TrialRunner(pattern([0, 1, 2, 3]), CONFIG);
    runner.start();
    vi.advanceTimersByTime(CONFIG.preparationMs);
    expect(runner.currentPhase()).toBe('observation');
    vi.advanceTimersByTime(19_999);
    expect(runner.currentPhase()).toBe('observation');
    vi.advanceTimersByTime(1);
    expect(runner.currentPhase()).toBe('build');
  });

  it('ends observation as soon as every tile has been revealed', () => {
    const runner = new TrialRunner(pattern([0, 1, 2, 3]), CONFIG);
    runner.start();
    vi.advanceTimersByTime(CONFIG.preparationMs + 7000);
    [0, 1, 2].forEach((c) => runner.revealTile(c));
    expect(runner.currentPhase()).toBe('observation');
    vi.advanceTimersByTime(2000); // t = 9 s into observation
    runner.revealTile(3);
    expect(runner.currentPhase()).toBe('build');
  });

  it('shows a revealed color for exactly 1000 ms', () => {
    const hidden: number[] = [];
    const revealed: Array<[number, number]> = [];
    const runner = new TrialRunner(pattern([0, 5], 2), CONFIG, {
      onTileRevealed: (cell, color) => revealed.push([cell, color]),
      onTileHidden: (cell) => hidden.push(cell),
    });
    runner.start();
    vi.advanceTimersByTime(CONFIG.preparationMs);
    runner.revealTile(5);
    expect(revealed).toEqual([[5, 2]]);
    vi.advanceTimersByTime(999);
    expect(hidden).toEqual([]);
    vi.advanceTimersByTime(1);
    expect(hidden).toEqual([5]);
  });

  it('ignores empty cells, repeats, and out-of-phase interactions', () => {
    const revealed: number[] = [];
    const runner = new TrialRunner(pattern([0, 1]), CONFIG, {
      onTileRevealed: (cell) => revealed.push(cell),
    });
    runner.start();
    runner.revealTile(0); // still preparation: no-op
    vi.advanceTimersByTime(CONFIG.preparationMs);
    runner.revealTile(7); // empty cell
    runner.revealTile(0);
    runner.revealTile(0); // repeat
    expect(revealed).toEqual([0]);
  });

  it('scores the submitted build and resolves after feedback', async () => {
    const target = pattern([0, 1, 2]);
    const runner = new TrialRunner(target, CONFIG);
    runner.start();
    vi.advanceTimersByTime(CONFIG.preparationMs);
    [0, 1, 2].forEach((c) => runner.revealTile(c));
    runner.submitBuild([...target.cells]);
    expect(runner.currentPhase()).toBe('feedback');
    vi.advanceTimersByTime(CONFIG.feedbackMs);
    const result = await runner.done;
    expect(result.passed).toBe(true);
    expect(result.accuracy).toBe(1);
  });

  it('expires the build phase into a zero-accuracy fail', async () => {
    const runner = new TrialRunner(pattern([0]), CONFIG);
    runner.start();
    await vi.runAllTimersAsync();
    const result = await runner.done;
    expect(result.passed).toBe(false);
    expect(result.accuracy).toBe(0);
  });

  it('rejects submissions outside the build phase', () => {
    const runner = new TrialRunner(pattern([0]), CONFIG);
    runner.start();
    expect(() => runner.submitBuild(emptyBuild())).toThrow(/preparation/);
  });

  it('rejects double starts and empty patterns', () => {
    const runner = new TrialRunner(pattern([0]), CONFIG);
    runner.start();
    expect(() => runner.start()).toThrow();
    expect(() => new TrialRunner(pattern([]), CONFIG)).toThrow();
  });
});
