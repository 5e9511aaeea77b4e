/** Typed client for the engine's HTTP API. The UI holds no generation
 * logic: everything below is a thin fetch wrapper plus job polling. */

import { parseChex, type HeatmapStack } from './chex';

export type AdjustmentEntries = Record<string, number>;

export type JobTicket = {
  job_id: string;
  state: 'queued' | 'running' | 'done' | 'failed';
  result_ref: string | null;
  error: string | null;
  history: Array<{ state: string; at: string }>;
};

export type VersionInfo = {
  id: number;
  ref: string;
  parent: number | null;
  prompt: string;
  adjustment: { entries: AdjustmentEntries };
  seed: number;
  kind: 'diffuse' | 'adjust' | 'inpaint';
  created_at: string;
  explanation: ExplanationDoc | null;
};

export type ExplanationDoc = {
  tokens: string[];
  saliencies: number[];
  similar_tokens: number[][];
  zero_contribution: boolean[];
  tau: number;
};

export type DiffRun = { op: 'equal' | 'delete' | 'insert'; tokens: string[] };

export type DiffDocument = {
  a: number;
  b: number;
  prompt_diff: DiffRun[];
  adjustment_delta: Array<{ token_index: number; a_gamma: number; b_gamma: number }>;
  images: string[];
};

export type RefineSuggestion = { refined: string; appended: string[]; source: string };

export type ModifierEntry = { phrase: string; n: number; frequency: number };

export type PromptHit = { id: string; text: string; image_path: string | null };

export type Stroke = { x: number; y: number; r: number };

export const JOB_POLL_MS = 500;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail?: string,
  ) {
    super(detail ? `${code}: ${detail}` : code);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base = '',
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let code = `HTTP${response.status}`;
      let detail: string | undefined;
      try {
        const body = await response.json();
        code = body.error ?? code;
        detail = body.detail;
      } catch {
        // non-JSON error body
      }
      throw new ApiError(response.status, code, detail);
    }
    return response.json() as Promise<T>;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request('/healthz');
  }

  async createSession(): Promise<string> {
    const doc = await this.post<{ session_id: string }>('/sessions', {});
    return doc.session_id;
  }

  refine(sessionId: string, prompt: string): Promise<RefineSuggestion> {
    return this.post(`/sessions/${sessionId}/refine`, { prompt });
  }

  generate(
    sessionId: string,
    prompt: string,
    seed: number,
    adjustment: AdjustmentEntries,
    trace = true,
  ): Promise<JobTicket> {
    return this.post(`/sessions/${sessionId}/generate`, {
      prompt,
      seed,
      adjustment: { entries: adjustment },
      trace,
    });
  }

  /** Inpainting always travels as brush circles; the server rasterizes,
   * keeping the bit-exact pixel contract on its side. */
  inpaint(
    sessionId: string,
    versionId: number,
    strokes: Stroke[],
    prompt: string | null,
    seed: number,
  ): Promise<JobTicket> {
    return this.post(`/sessions/${sessionId}/inpaint`, {
      version_id: versionId,
      strokes,
      prompt,
      seed,
    });
  }

  job(jobId: string): Promise<JobTicket> {
    return this.request(`/jobs/${jobId}`);
  }

  /** Poll a job every JOB_POLL_MS until it settles. */
  async waitForJob(
    jobId: string,
    onTick?: (ticket: JobTicket) => void,
    intervalMs = JOB_POLL_MS,
  ): Promise<JobTicket> {
    for (;;) {
      const ticket = await this.job(jobId);
      onTick?.(ticket);
      if (ticket.state === 'done' || ticket.state === 'failed') return ticket;
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  async versions(sessionId: string): Promise<VersionInfo[]> {
    const doc = await this.request<{ versions: VersionInfo[] }>(
      `/sessions/${sessionId}/versions`,
    );
    return doc.versions;
  }

  diff(sessionId: string, a: number, b: number): Promise<DiffDocument> {
    return this.request(`/sessions/${sessionId}/diff?a=${a}&b=${b}`);
  }

  imageUrl(ref: string): string {
    return `${this.base}/versions/${ref}/image`;
  }

  async heatmaps(ref: string): Promise<HeatmapStack> {
    const response = await this.fetchFn(`${this.base}/versions/${ref}/heatmaps`);
    if (!response.ok) throw new ApiError(response.status, `HTTP${response.status}`);
    return parseChex(await response.arrayBuffer());
  }

  async searchModifiers(query: string): Promise<PromptHit[]> {
    const doc = await this.request<{ results: PromptHit[] }>(
      `/modifiers?query=${encodeURIComponent(query)}`,
    );
    return doc.results;
  }

  async similarModifiers(phrase: string, k = 3): Promise<ModifierEntry[]> {
    const doc = await this.request<{ results: ModifierEntry[] }>(
      `/modifiers/similar?phrase=${encodeURIComponent(phrase)}&k=${k}`,
    );
    return doc.results;
  }

  async dissimilarModifiers(phrase: string, k = 3): Promise<ModifierEntry[]> {
    const doc = await this.request<{ results: ModifierEntry[] }>(
      `/modifiers/dissimilar?phrase=${encodeURIComponent(phrase)}&k=${k}`,
    );
    return doc.results;
  }
}
