// Parameter panel state and its mapping onto request overrides.
//
// Panel fields are kept as raw strings ("" means "use the server default");
// buildOverrides validates them against the same constraints the server
// enforces and returns either the exact override payload or field-level
// error messages. The request body is derived from nothing but this state,
// so reloading the page with the same panel state reproduces the same
// request.

import type { Overrides, QueryResponse, RouteType } from "./types";

export interface PanelState {
  chunkTopK: string;
  pathTopK: string;
  denseTopK: string;
  coarseFusion: "" | "simple_merge" | "rrf";
  rerankFusion: "" | "off" | "rrf" | "answer_longer" | "answer_concat";
  rerankK: string;
  rerankPolicy: "" | "off" | "max_similarity" | "entropy";
  rerankThreshold: string;
  compressEnabled: "" | "true" | "false";
  compressRate: string;
  template: "" | "normal" | "cot" | "markdown" | "focused";
  answerMerge: "" | "off" | "document_concat" | "prompt_merge";
  allowedFilePrefixes: string;
}

export function emptyPanel(): PanelState {
  return {
    chunkTopK: "",
    pathTopK: "",
    denseTopK: "",
    coarseFusion: "",
    rerankFusion: "",
    rerankK: "",
    rerankPolicy: "",
    rerankThreshold: "",
    compressEnabled: "",
    compressRate: "",
    template: "",
    answerMerge: "",
    allowedFilePrefixes: "",
  };
}

export type FieldErrors = Partial<Record<keyof PanelState, string>>;

export interface BuildResult {
  overrides: Overrides | null;
  errors: FieldErrors;
}

function parsePositiveInt(raw: string): number | null {
  if (!/^\d+$/.test(raw)) return null;
  const value = Number(raw);
  return value >= 1 ? value : null;
}

function parseUnitFloat(raw: string): number | null {
  const value = Number(raw);
  return Number.isFinite(value) ? value : null;
}

/** Map the panel state 1:1 onto the request overrides, or report errors. */
export function buildOverrides(panel: PanelState): BuildResult {
  const errors: FieldErrors = {};
  const overrides: Overrides = {};

  const routeTopK: Partial<Record<RouteType, number>> = {};
  const routeFields: Array<[keyof PanelState, RouteType]> = [
    ["chunkTopK", "chunk"],
    ["pathTopK", "path"],
    ["denseTopK", "dense"],
  ];
  for (const [field, route] of routeFields) {
    const raw = panel[field].trim();
    if (!raw) continue;
    const value = parsePositiveInt(raw);
    if (value === null) {
      errors[field] = "must be an integer >= 1";
    } else {
      routeTopK[route] = value;
    }
  }
  if (Object.keys(routeTopK).length > 0) overrides.route_top_k = routeTopK;

  if (panel.coarseFusion) overrides.coarse_fusion = panel.coarseFusion;
  if (panel.rerankFusion) overrides.rerank_fusion = panel.rerankFusion;

  if (panel.rerankK.trim()) {
    const value = parsePositiveInt(panel.rerankK.trim());
    if (value === null) errors.rerankK = "must be an integer >= 1";
    else overrides.rerank_k = value;
  }
  if (panel.rerankPolicy) overrides.rerank_policy = panel.rerankPolicy;
  if (panel.rerankThreshold.trim()) {
    const value = parseUnitFloat(panel.rerankThreshold.trim());
    if (value === null || value < 0 || value > 1) {
      errors.rerankThreshold = "must be a number in [0, 1]";
    } else {
      overrides.rerank_threshold = value;
    }
  }

  if (panel.compressEnabled) overrides.compress_enabled = panel.compressEnabled === "true";
  if (panel.compressRate.trim()) {
    const value = parseUnitFloat(panel.compressRate.trim());
    if (value === null || value <= 0 || value > 1) {
      errors.compressRate = "must be a number in (0, 1]";
    } else {
      overrides.compress_rate = value;
    }
  }

  if (panel.template) overrides.template = panel.template;
  if (panel.answerMerge) overrides.answer_merge = panel.answerMerge;

  if (panel.allowedFilePrefixes.trim()) {
    overrides.allowed_file_prefixes = panel.allowedFilePrefixes
      .split(",")
      .map((p) => p.trim())
      .filter((p) => p.length > 0);
  }

  if (Object.keys(errors).length > 0) return { overrides: null, errors };
  return {
    overrides: Object.keys(overrides).length > 0 ? overrides : null,
    errors: {},
  };
}

export interface HistoryEntry {
  question: string;
  response: QueryResponse;
}

/** Append-only per-session history plus the current panel state. */
export class UiSession {
  readonly history: HistoryEntry[] = [];
  panel: PanelState = emptyPanel();
  pending = false;

  record(question: string, response: QueryResponse): void {
    this.history.push({ question, response });
  }
}
