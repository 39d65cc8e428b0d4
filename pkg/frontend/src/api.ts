/**
 * Thin HTTP client for the session service. Create and outcome posts
 * carry idempotency tokens and are retried on network failure, so a
 * dropped response can never double-advance a session.
 */

import {
  CreateSessionResponse,
  OutcomeResponse,
  PatternSpec,
  PosteriorResponse,
  StimulusParams,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ApiError extends Error {
  status: number;
  code?: string;
}

export interface ClientOptions {
  fetchFn?: FetchLike;
  retries?: number;
  retryDelayMs?: number;
  makeToken?: () => string;
}

function makeError(status: number, body: unknown): ApiError {
  const code = (body as { code?: string })?.code;
  const message = (body as { message?: string })?.message ?? `HTTP ${status}`;
  const err = new Error(message) as ApiError;
  err.status = status;
  err.code = code;
  return err;
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

function defaultToken(): string {
  const c = globalThis.crypto;
  if (c?.randomUUID) return c.randomUUID();
  return `tok-${Date.now()}-${Math.floor(Math.random() * 1e9)}`;
}

export class ApiClient {
  private readonly fetchFn: FetchLike;
  private readonly retries: number;
  private readonly retryDelayMs: number;
  private readonly makeToken: () => string;

  constructor(readonly baseUrl: string, opts: ClientOptions = {}) {
    this.fetchFn = opts.fetchFn ?? ((url, init) => fetch(url, init));
    this.retries = opts.retries ?? 3;
    this.retryDelayMs = opts.retryDelayMs ?? 250;
    this.makeToken = opts.makeToken ?? defaultToken;
  }

  async createSession(
    mode: 'adaptive' | 'classic',
    extras: Record<string, unknown> = {},
  ): Promise<CreateSessionResponse> {
    const body = { mode, idempotency_token: this.makeToken(), ...extras };
    return this.post<CreateSessionResponse>('/sessions', body);
  }

  async reportOutcome(
    sessionId: string,
    params: StimulusParams,
    passed: boolean,
  ): Promise<OutcomeResponse> {
    const body = {
      params,
      passed,
      idempotency_token: this.makeToken(),
    };
    return this.post<OutcomeResponse>(`/sessions/${sessionId}/outcome`, body);
  }

  async getPosterior(sessionId: string): Promise<PosteriorResponse> {
    return this.get<PosteriorResponse>(`/sessions/${sessionId}/posterior`);
  }

  async getPattern(params: StimulusParams, seed = 0): Promise<PatternSpec> {
    const q = `L=${params.L}&K=${params.K}&seed=${seed}`;
    return this.get<PatternSpec>(`/patterns?${q}`);
  }

  async archive(sessionId: string): Promise<Record<string, unknown>> {
    return this.post<Record<string, unknown>>(`/sessions/${sessionId}/archive`, {});
  }

  private async get<T>(path: string): Promise<T> {
    return this.request<T>(path, { method: 'GET' });
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    // the body (including any idempotency token) is frozen across retries
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  private async request<T>(path: string, init: RequestInit): Promise<T> {
    let lastErr: unknown;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      try {
        const resp = await this.fetchFn(this.baseUrl + path, init);
        const payload = await resp.json().catch(() => ({}));
        if (!resp.ok) throw makeError(resp.status, payload);
        return payload as T;
      } catch (err) {
        // HTTP-level errors are final; only transport failures retry
        if ((err as ApiError).status !== undefined) throw err;
        lastErr = err;
        if (attempt < this.retries) await sleep(this.retryDelayMs * (attempt + 1));
      }
    }
    throw lastErr;
  }
}
