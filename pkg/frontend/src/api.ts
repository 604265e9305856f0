/** Thin typed client for the session service. */

import type { ApiErrorBody, StatePayload } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type ApiResult =
  | { kind: "ok"; payload: StatePayload }
  | { kind: "conflict"; message: string }
  | { kind: "error"; code: string; message: string }
  | { kind: "network"; message: string };

async function decode(resp: Response): Promise<ApiResult> {
  if (resp.ok) {
    return { kind: "ok", payload: (await resp.json()) as StatePayload };
  }
  let body: ApiErrorBody | null = null;
  try {
    body = (await resp.json()) as ApiErrorBody;
  } catch {
    /* non-JSON error body */
  }
  const code = body?.error?.code ?? `http_${resp.status}`;
  const message = body?.error?.message ?? resp.statusText;
  if (code === "conflict") return { kind: "conflict", message };
  return { kind: "error", code, message };
}

export class SessionApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (...args) => fetch(...args),
    private token: string | null = null,
  ) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "content-type": "application/json" };
    if (this.token) h["authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request(path: string, init?: RequestInit): Promise<ApiResult> {
    try {
      const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
        ...init,
        headers: { ...this.headers(), ...(init?.headers ?? {}) },
      });
      return await decode(resp);
    } catch (err) {
      return { kind: "network", message: err instanceof Error ? err.message : String(err) };
    }
  }

  createSession(body: Record<string, unknown>): Promise<ApiResult> {
    return this.request("/sessions", { method: "POST", body: JSON.stringify(body) });
  }

  getState(sessionId: string): Promise<ApiResult> {
    return this.request(`/sessions/${sessionId}`);
  }

  submitLabel(sessionId: string, step: number, itemId: string, classIndex: number): Promise<ApiResult> {
    return this.request(`/sessions/${sessionId}/labels`, {
      method: "POST",
      body: JSON.stringify({ step, item_id: itemId, class_index: classIndex }),
    });
  }

  undo(sessionId: string): Promise<ApiResult> {
    return this.request(`/sessions/${sessionId}/undo`, { method: "POST" });
  }

  async exportCsv(sessionId: string): Promise<string> {
    const resp = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/export`, {
      headers: this.headers(),
    });
    return resp.text();
  }
}
