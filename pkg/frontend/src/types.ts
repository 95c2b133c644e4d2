/** Wire types mirroring the service's /v1/recommend JSON contract. */

export interface ResultItem {
  doc_id: string;
  title: string | null;
  url: string | null;
  cross_score: number;
  retrieval_score: number;
  rank: number;
}

export interface QueryResponse {
  results: ResultItem[];
  latency_ms: number;
  index_built_at: number;
  model_tag: string;
  generation?: number;
}

export interface HealthResponse {
  status: string;
  generation: number;
  docs: number;
}

/** One immutable entry in the conversation log. */
export type ChatTurn =
  | { role: 'user'; text: string; timestamp: number }
  | { role: 'system'; response: QueryResponse; timestamp: number }
  | { role: 'system'; error: string; timestamp: number };
