// Typed client for the carelens JSON endpoints. The console talks only to
// this API; failures surface as ApiRequestError carrying the server's code.

import type {
  ChatMessage,
  Distribution,
  ExplanationPayload,
  XaiKind,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const code = typeof body.code === "string" ? body.code : "http_error";
      const message =
        typeof body.message === "string" ? body.message : resp.statusText;
      throw new ApiRequestError(resp.status, code, message);
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  predefinedQueries(): Promise<{ queries: string[] }> {
    return this.request("/queries");
  }

  createSession(email: string, participantId: string): Promise<{ session_id: string }> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({ email, participant_id: participantId }),
    });
  }

  postMessage(
    sessionId: string,
    text: string,
    artifacts?: XaiKind[],
  ): Promise<ChatMessage & { session_id: string }> {
    return this.request(`/sessions/${sessionId}/messages`, {
      method: "POST",
      body: JSON.stringify({ text, artifacts }),
    });
  }

  postEmotion(
    sessionId: string,
    timestamp: number,
    distribution: Distribution,
  ): Promise<{ accepted: boolean }> {
    return this.request(`/sessions/${sessionId}/emotions`, {
      method: "POST",
      body: JSON.stringify({ timestamp, distribution }),
    });
  }

  history(sessionId: string): Promise<{ session_id: string; messages: ChatMessage[] }> {
    return this.request(`/sessions/${sessionId}/history`);
  }

  explanation(
    participantId: string,
    kind: XaiKind,
    instance?: number,
  ): Promise<ExplanationPayload> {
    const q = instance === undefined ? "" : `?instance=${instance}`;
    return this.request(`/participants/${participantId}/explanations/${kind}${q}`);
  }
}
