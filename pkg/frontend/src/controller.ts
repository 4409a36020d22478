// Submit flow, separated from the DOM so tests can drive it with a
// request-capturing fetch: validate the panel, build the exact override
// payload, enforce one in-flight query, and append to history only on
// success.

import { postQuery, type FetchLike } from "./api";
import { buildOverrides, type FieldErrors, type UiSession } from "./state";
import type { QueryRequest, QueryResponse } from "./types";

export interface SubmitCallbacks {
  onResult: (response: QueryResponse) => void;
  onError: (status: number, message: string) => void;
  onFieldErrors?: (errors: FieldErrors) => void;
  onPendingChange?: (pending: boolean) => void;
}

export function buildRequest(
  session: UiSession,
  question: string,
): { request: QueryRequest | null; errors: FieldErrors } {
  const { overrides, errors } = buildOverrides(session.panel);
  if (Object.keys(errors).length > 0) return { request: null, errors };
  return {
    request: { question, ...(overrides ? { overrides } : {}) },
    errors: {},
  };
}

export async function submitQuestion(
  session: UiSession,
  question: string,
  callbacks: SubmitCallbacks,
  fetchLike: FetchLike = fetch,
): Promise<void> {
  const trimmed = question.trim();
  if (!trimmed || session.pending) return;
  const { request, errors } = buildRequest(session, trimmed);
  if (!request) {
    callbacks.onFieldErrors?.(errors);
    return;
  }
  session.pending = true;
  callbacks.onPendingChange?.(true);
  try {
    const result = await postQuery(request, fetchLike);
    if (!result.ok) {
      callbacks.onError(result.status, result.message);
      return;
    }
    session.record(trimmed, result.body);
    callbacks.onResult(result.body);
  } finally {
    session.pending = false;
    callbacks.onPendingChange?.(false);
  }
}
