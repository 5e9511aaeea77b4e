import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { ApiClient, ApiError, JOB_POLL_MS, type JobTicket } from '../src/api';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

function ticket(state: JobTicket['state'], ref: string | null = null): JobTicket {
  return { job_id: 'j1', state, result_ref: ref, error: null, history: [] };
}

describe('api client', () => {
  it('creates sessions', async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ session_id: 'abc' }));
    const api = new ApiClient('', fetchFn);
    expect(await api.createSession()).toBe('abc');
    expect(fetchFn).toHaveBeenCalledWith('/sessions', expect.objectContaining({ method: 'POST' }));
  });

  it('sends adjustments in the wire format {entries: {index: gamma}}', async () => {
    const fetchFn = vi.fn(async () => jsonResponse(ticket('queued')));
    const api = new ApiClient('', fetchFn);
    await api.generate('sess', 'a wolf', 7, { '1': 0.5 });
    const [, init] = fetchFn.mock.calls[0] as unknown as [string, RequestInit];
    expect(JSON.parse(init.body as string)).toEqual({
      prompt: 'a wolf',
      seed: 7,
      adjustment: { entries: { '1': 0.5 } },
      trace: true,
    });
  });

  it('sends inpaint requests as strokes, never masks', async () => {
    const fetchFn = vi.fn(async () => jsonResponse(ticket('queued')));
    const api = new ApiClient('', fetchFn);
    await api.inpaint('sess', 0, [{ x: 4, y: 5, r: 2 }], null, 3);
    const [url, init] = fetchFn.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe('/sessions/sess/inpaint');
    const body = JSON.parse(init.body as string);
    expect(body.strokes).toEqual([{ x: 4, y: 5, r: 2 }]);
    expect(body).not.toHaveProperty('mask');
  });

  it('surfaces domain errors with the engine error name', async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ error: 'GammaOutOfRange', detail: 'gamma 3.0' }, 422),
    );
    const api = new ApiClient('', fetchFn);
    const failure = await api.generate('s', 'p', 0, { '1': 3.0 }).catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(422);
    expect(failure.code).toBe('GammaOutOfRange');
  });

  describe('job polling', () => {
    beforeEach(() => vi.useFakeTimers());
    afterEach(() => vi.useRealTimers());

    it('polls every 500 ms until the job settles', async () => {
      const states: JobTicket[] = [
        ticket('queued'),
        ticket('running'),
        ticket('done', 'sess-0'),
      ];
      let call = 0;
      const fetchFn = vi.fn(async () => jsonResponse(states[Math.min(call++, 2)]));
      const api = new ApiClient('', fetchFn);

      const seen: string[] = [];
      const settled = api.waitForJob('j1', (t) => seen.push(t.state));

      await vi.advanceTimersByTimeAsync(JOB_POLL_MS);
      await vi.advanceTimersByTimeAsync(JOB_POLL_MS);
      const result = await settled;

      expect(JOB_POLL_MS).toBe(500);
      expect(result.state).toBe('done');
      expect(result.result_ref).toBe('sess-0');
      expect(seen).toEqual(['queued', 'running', 'done']);
      expect(fetchFn).toHaveBeenCalledTimes(3);
    });

    it('stops polling on failure', async () => {
      const fetchFn = vi.fn(async () =>
        jsonResponse({ ...ticket('failed'), error: 'DimensionMismatch: boom' }),
      );
      const api = new ApiClient('', fetchFn);
      const result = await api.waitForJob('j1');
      expect(result.state).toBe('failed');
      expect(fetchFn).toHaveBeenCalledTimes(1);
    });
  });

  it('builds version image urls from refs', () => {
    const api = new ApiClient('http://host');
    expect(api.imageUrl('abc-3')).toBe('http://host/versions/abc-3/image');
  });
});
