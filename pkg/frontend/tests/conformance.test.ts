/**
 * Scripted headless client session against the real HTTP service: the
 * service process is spawned for the duration of the suite, and a full
 * adaptive session is driven through the phase state machine with
 * scaled-down (but real) timers.
 */
import { spawn, ChildProcess } from 'node:child_process';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { TrialRunner } from '../src/phases.js';
import { sessionLoop } from '../src/session.js';
import { PatternSpec, PhaseConfig, StimulusParams } from '../src/types.js';

const PORT = 8779;
const BASE = `http://127.0.0.1:${PORT}`;

// real timers, scaled down so a 30-trial session stays fast
const FAST: PhaseConfig = {
  preparationMs: 120,
  observationMsPerTile: 150,
  revealMs: 40,
  buildMs: 300,
  feedbackMs: 120,
};

const BOOT = `
import sys
sys.path.insert(0, "src")
import uvicorn
from wmsurface.gp import GPConfig
from wmsurface.service import create_app
app = create_app(config=GPConfig(iterations=120, online_iterations=50))
uvicorn.run(app, host="127.0.0.1", port=${PORT}, log_level="warning")
`;

let service: ChildProcess;

async function waitForService(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const r = await fetch(`${BASE}/patterns?L=1&K=1`);
      if (r.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error('service did not come up');
}

beforeAll(async () => {
  service = spawn('python3', ['-c', BOOT], { cwd: '..', stdio: 'ignore' });
  await waitForService();
}, 60_000);

afterAll(() => {
  service?.kill();
});

describe('adaptive-session conformance', () => {
  it(
    'completes exactly 30 trials with echo checks and accurate phase timers',
    async () => {
      const client = new ApiClient(BASE);
      const timerErrors: number[] = [];

      const playTrialHeadless = async (
        rec: StimulusParams,
        pattern: PatternSpec | null,
      ): Promise<boolean> => {
        expect(pattern).not.toBeNull();
        const marks: Array<[string, number]> = [];
        const runner = new TrialRunner(pattern!, FAST, {
          onPhase: (phase) => marks.push([phase, Date.now()]),
        });
        runner.start();
        // reveal every occupied tile as soon as observation opens, then
        // submit a perfect build for easy trials and an empty one otherwise
        const waitFor = (phase: string) =>
          new Promise<void>((resolve) => {
            const poll = setInterval(() => {
              if (runner.currentPhase() === phase) {
                clearInterval(poll);
                resolve();
              }
            }, 5);
          });
        await waitFor('observation');
        pattern!.cells.forEach((c, i) => c >= 0 && runner.revealTile(i));
        await waitFor('build');
        const shouldPass = rec.L <= 6;
        runner.submitBuild(
          shouldPass ? [...pattern!.cells] : pattern!.cells.map(() => -1),
        );
        const result = await runner.done;
        const at = (phase: string) => marks.find(([p]) => p === phase)![1];
        timerErrors.push(
          Math.abs(at('observation') - at('preparation') - FAST.preparationMs),
          Math.abs(at('done') - at('feedback') - FAST.feedbackMs),
        );
        return result.passed;
      };

      const summary = await sessionLoop(client, 'adaptive', playTrialHeadless, {
        seed: 3,
        fetchPatterns: true,
      });

      expect(summary.trials).toHaveLength(30);
      expect(summary.recommendations[0]).toEqual({ L: 1, K: 1 });
      expect(summary.echoChecksPassed).toBe(true);
      expect(summary.termination.terminated).toBe(true);
      expect(summary.termination.trials).toBe(30);
      expect(summary.termination.curve).toBeDefined();
      expect(Math.max(...timerErrors)).toBeLessThanOrEqual(100);
    },
    120_000,
  );

  it('honors the observation deadline when no tiles are revealed', async () => {
    const client = new ApiClient(BASE);
    const pattern = await client.getPattern({ L: 2, K: 1 }, 0);
    const marks: Array<[string, number]> = [];
    const runner = new TrialRunner(pattern, FAST, {
      onPhase: (phase) => marks.push([phase, Date.now()]),
    });
    runner.start();
    await runner.done;
    const at = (phase: string) => marks.find(([p]) => p === phase)![1];
    const observed = at('build') - at('observation');
    expect(Math.abs(observed - 2 * FAST.observationMsPerTile)).toBeLessThanOrEqual(100);
    const buildHeld = at('feedback') - at('build');
    expect(Math.abs(buildHeld - FAST.buildMs)).toBeLessThanOrEqual(100);
  }, 30_000);

  it('rejects an infeasible pattern request with a service error payload', async () => {
    const client = new ApiClient(BASE);
    const err = await client.getPattern({ L: 2, K: 6 }, 0).catch((e) => e);
    expect(err.status).toBe(400);
  });
});
