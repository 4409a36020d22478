// Thin typed client over the /v1 API with an injectable fetch.

import type { HealthResponse, QueryRequest, QueryResponse } from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type ApiResult<T> =
  | { ok: true; body: T }
  | { ok: false; status: number; message: string };

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText || `HTTP ${response.status}`;
  }
}

export async function postQuery(
  request: QueryRequest,
  fetchLike: FetchLike = fetch,
  baseUrl = "",
): Promise<ApiResult<QueryResponse>> {
  let response: Response;
  try {
    response = await fetchLike(`${baseUrl}/v1/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
  } catch (exc) {
    return { ok: false, status: 0, message: `network error: ${exc}` };
  }
  if (!response.ok) {
    return { ok: false, status: response.status, message: await errorMessage(response) };
  }
  return { ok: true, body: (await response.json()) as QueryResponse };
}

export async function getHealth(
  fetchLike: FetchLike = fetch,
  baseUrl = "",
): Promise<ApiResult<HealthResponse>> {
  let response: Response;
  try {
    response = await fetchLike(`${baseUrl}/v1/health`);
  } catch (exc) {
    return { ok: false, status: 0, message: `network error: ${exc}` };
  }
  if (!response.ok) {
    return { ok: false, status: response.status, message: await errorMessage(response) };
  }
  return { ok: true, body: (await response.json()) as HealthResponse };
}
