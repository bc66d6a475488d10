/** Typed client for the session service.
 *
 * The transport is injectable so tests can run against a recorded stub;
 * the browser build passes window.fetch.
 */

import type {
  GroupResponse,
  InteractionEventWire,
  LayoutResponse,
  SatisfactionSnapshot,
  SessionInfo,
  SummaryResponse,
  TrainingStatus,
} from "./types.js";

export type Transport = (
  url: string,
  init?: { method?: string; body?: string; headers?: Record<string, string> },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly transport: Transport,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.transport(this.base + path, {
      method,
      body: body === undefined ? undefined : JSON.stringify(body),
      headers: { "content-type": "application/json" },
    });
    const payload = (await response.json()) as Record<string, unknown>;
    if (response.status >= 400) {
      throw new ApiError(response.status, String(payload["detail"] ?? response.status));
    }
    return payload as T;
  }

  createSession(documents: { id: string; text: string }[], seed = 0) {
    return this.request<{ v: 1; session_id: string }>("POST", "/sessions", { documents, seed });
  }

  sessionInfo(sid: string) {
    return this.request<SessionInfo>("GET", `/sessions/${sid}`);
  }

  postEvent(sid: string, event: InteractionEventWire) {
    return this.request<SatisfactionSnapshot>("POST", `/sessions/${sid}/events`, event);
  }

  setFocus(sid: string, doc: string | null) {
    return this.request<{ v: 1; focus: string | null }>("POST", `/sessions/${sid}/focus`, { doc });
  }

  startTraining(sid: string, K: number, hyperparameters?: Record<string, unknown>) {
    return this.request<{ v: 1; status: string }>("POST", `/sessions/${sid}/train`, {
      K,
      ...(hyperparameters ? { hyperparameters } : {}),
    });
  }

  trainingStatus(sid: string) {
    return this.request<TrainingStatus>("GET", `/sessions/${sid}/train`);
  }

  cancelTraining(sid: string) {
    return this.request<{ v: 1; status: string }>("DELETE", `/sessions/${sid}/train`);
  }

  summary(sid: string, level: number) {
    return this.request<SummaryResponse>("GET", `/sessions/${sid}/summary?level=${level}`);
  }

  layout(sid: string, level: number) {
    return this.request<LayoutResponse>("GET", `/sessions/${sid}/layout?level=${level}`);
  }

  group(sid: string, level: number, gid: number) {
    return this.request<GroupResponse>("GET", `/sessions/${sid}/groups/${gid}?level=${level}`);
  }
}
