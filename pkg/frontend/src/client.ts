/**
 * Thin typed client for the four session endpoints. All configuration is a
 * single base URL; errors carry the service's {error, message} body so the
 * controller can surface 409/422 inline instead of crashing.
 */

import type { LabelResult, PendingQuery, SessionState } from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseError(response: Response): Promise<ApiError> {
  let code = "error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && typeof body === "object") {
      code = body.error ?? code;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(response.status, code, message);
}

export class SessionClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  async createSession(config: Record<string, unknown>): Promise<string> {
    const body = await this.request<{ session_id: string }>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ config }),
    });
    return body.session_id;
  }

  nextQuery(sessionId: string): Promise<PendingQuery> {
    return this.request<PendingQuery>(`/sessions/${sessionId}/next`);
  }

  submitLabel(sessionId: string, instanceId: string, outcome: number): Promise<LabelResult> {
    return this.request<LabelResult>(`/sessions/${sessionId}/label`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ instance_id: instanceId, outcome }),
    });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request<SessionState>(`/sessions/${sessionId}/state`);
  }
}
