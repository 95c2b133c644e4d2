/** Thin fetch client for the recommendation service. */

import type { HealthResponse, QueryResponse } from './types.js';

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status?: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export class RecommendClient {
  constructor(private readonly endpoint: string) {}

  async recommend(query: string, topN: number): Promise<QueryResponse> {
    let resp: Response;
    try {
      resp = await fetch(`${this.endpoint}/v1/recommend`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ query, top_n: topN, top_k: Math.max(topN, 100) }),
      });
    } catch (err) {
      throw new ApiError(`cannot reach ${this.endpoint}: ${String(err)}`);
    }
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: string };
        if (body.error) detail = `${detail}: ${body.error}`;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(detail, resp.status);
    }
    return (await resp.json()) as QueryResponse;
  }

  async health(): Promise<HealthResponse> {
    let resp: Response;
    try {
      resp = await fetch(`${this.endpoint}/v1/health`);
    } catch (err) {
      throw new ApiError(`cannot reach ${this.endpoint}: ${String(err)}`);
    }
    if (!resp.ok) throw new ApiError(`HTTP ${resp.status}`, resp.status);
    return (await resp.json()) as HealthResponse;
  }
}
