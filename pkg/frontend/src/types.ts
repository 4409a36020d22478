// Wire types for the /v1 API.

export type RouteType = "chunk" | "path" | "dense";

export interface Overrides {
  route_top_k?: Partial<Record<RouteType, number>>;
  coarse_fusion?: "simple_merge" | "rrf";
  rerank_fusion?: "off" | "rrf" | "answer_longer" | "answer_concat";
  rerank_k?: number;
  rerank_policy?: "off" | "max_similarity" | "entropy";
  rerank_threshold?: number;
  compress_enabled?: boolean;
  compress_rate?: number;
  template?: "normal" | "cot" | "markdown" | "focused";
  answer_merge?: "off" | "document_concat" | "prompt_merge";
  allowed_file_prefixes?: string[];
}

export interface QueryRequest {
  question: string;
  overrides?: Overrides;
}

export interface ContextHit {
  chunk_id: string;
  text: string;
  score: number;
  rank: number;
  route: string;
  file_path: string;
  knowledge_path: string;
}

export interface QueryResponse {
  answer: string;
  contexts: ContextHit[];
  timings_ms: Record<string, number>;
  config_fingerprint: string;
  warnings: Array<Record<string, string>>;
}

export interface HealthResponse {
  status: string;
  index_doc_count: number;
  backends: Record<string, boolean>;
}
