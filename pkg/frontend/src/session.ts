/**
 * Headless session driver: creates a session, then alternates
 * recommendation -> trial -> outcome report until the service terminates
 * the session. The client never chooses parameters itself; it is a pure
 * presenter/reporter around the service's recommendations.
 */

import { ApiClient } from './api.js';
import {
  OutcomeResponse,
  PatternSpec,
  PosteriorResponse,
  StimulusParams,
  sameParams,
} from './types.js';

export type TrialPlayer = (
  recommendation: StimulusParams,
  pattern: PatternSpec | null,
) => Promise<boolean> | boolean;

export interface SessionOptions {
  seed?: number;
  /** Fetch the standardized pattern for each recommendation. */
  fetchPatterns?: boolean;
  /** Called with the posterior after every reported outcome. */
  onPosterior?: (posterior: PosteriorResponse) => void;
  /** Hard cap on trials in case the service misbehaves. */
  maxTrials?: number;
}

export interface SessionSummary {
  sessionId: string;
  recommendations: StimulusParams[];
  trials: { params: StimulusParams; passed: boolean }[];
  /** Every reported outcome answered the recommendation it followed. */
  echoChecksPassed: boolean;
  termination: OutcomeResponse;
}

export async function sessionLoop(
  client: ApiClient,
  mode: 'adaptive' | 'classic',
  player: TrialPlayer,
  opts: SessionOptions = {},
): Promise<SessionSummary> {
  const maxTrials = opts.maxTrials ?? 500;
  const created = await client.createSession(mode, {
    ...(opts.seed !== undefined ? { seed: opts.seed } : {}),
  });
  const sessionId = created.session_id;

  const recommendations: StimulusParams[] = [];
  const trials: SessionSummary['trials'] = [];
  let echoChecksPassed = true;
  let recommendation = created.first_recommendation;
  let termination: OutcomeResponse = {};

  for (let trial = 0; trial < maxTrials; trial++) {
    recommendations.push(recommendation);
    const pattern = opts.fetchPatterns
      ? await client.getPattern(recommendation, opts.seed ?? 0)
      : null;
    const passed = await player(recommendation, pattern);

    const reported = recommendation;
    const response = await client.reportOutcome(sessionId, reported, passed);
    trials.push({ params: reported, passed });
    if (!sameParams(reported, recommendations[recommendations.length - 1]!)) {
      echoChecksPassed = false;
    }
    if (opts.onPosterior && mode === 'adaptive') {
      opts.onPosterior(await client.getPosterior(sessionId));
    }
    if (response.terminated) {
      termination = response;
      break;
    }
    if (!response.next) throw new Error('service returned neither next nor terminated');
    recommendation = response.next;
  }
  return { sessionId, recommendations, trials, echoChecksPassed, termination };
}
