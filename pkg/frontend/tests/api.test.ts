import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError, FetchLike } from '../src/api.js';

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

describe('ApiClient', () => {
  it('retries transport failures and reuses the same idempotency token', async () => {
    const bodies: string[] = [];
    let calls = 0;
    const fetchFn: FetchLike = async (_url, init) => {
      bodies.push(String(init?.body));
      calls++;
      if (calls < 3) throw new TypeError('network down');
      return jsonResponse(200, { next: { L: 2, K: 1 } });
    };
    const client = new ApiClient('http://svc', {
      fetchFn,
      retryDelayMs: 1,
      makeToken: () => 'tok-1',
    });
    const resp = await client.reportOutcome('s1', { L: 1, K: 1 }, true);
    expect(resp.next).toEqual({ L: 2, K: 1 });
    expect(calls).toBe(3);
    expect(new Set(bodies).size).toBe(1); // byte-identical retries
    expect(bodies[0]).toContain('"idempotency_token":"tok-1"');
  });

  it('does not retry HTTP-level errors and surfaces the service code', async () => {
    let calls = 0;
    const fetchFn: FetchLike = async () => {
      calls++;
      return jsonResponse(409, { code: 'session_closed', message: 'closed' });
    };
    const client = new ApiClient('http://svc', { fetchFn, retryDelayMs: 1 });
    const err = (await client
      .reportOutcome('s1', { L: 1, K: 1 }, false)
      .catch((e) => e)) as ApiError;
    expect(err.status).toBe(409);
    expect(err.code).toBe('session_closed');
    expect(calls).toBe(1);
  });

  it('gives up after the retry budget', async () => {
    let calls = 0;
    const fetchFn: FetchLike = async () => {
      calls++;
      throw new TypeError('still down');
    };
    const client = new ApiClient('http://svc', { fetchFn, retries: 2, retryDelayMs: 1 });
    await expect(client.getPosterior('s1')).rejects.toThrow('still down');
    expect(calls).toBe(3);
  });

  it('builds the pattern query from params', async () => {
    const urls: string[] = [];
    const fetchFn: FetchLike = async (url) => {
      urls.push(url);
      return jsonResponse(200, { cells: [] });
    };
    const client = new ApiClient('http://svc', { fetchFn });
    await client.getPattern({ L: 6, K: 3 }, 9);
    expect(urls).toEqual(['http://svc/patterns?L=6&K=3&seed=9']);
  });
});
