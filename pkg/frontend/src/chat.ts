// Chat panel state machine: one in-flight message per session, composer
// text retained with a retry banner on failure, predefined query prefill.
// DOM rendering subscribes to this controller; the logic stays testable.

import type { ApiClient } from "./api.js";
import type { ChatMessage, XaiKind } from "./types.js";

export interface ChatState {
  sessionId: string | null;
  messages: ChatMessage[];
  composer: string;
  pending: boolean;
  retryBanner: string | null;
  queries: string[];
}

export class ChatController {
  state: ChatState = {
    sessionId: null,
    messages: [],
    composer: "",
    pending: false,
    retryBanner: null,
    queries: [],
  };
  requestedArtifacts: XaiKind[] = [];
  private listeners: Array<() => void> = [];

  constructor(private api: ApiClient) {}

  subscribe(fn: () => void): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  async init(email: string, participantId: string): Promise<void> {
    const [session, queries] = await Promise.all([
      this.api.createSession(email, participantId),
      this.api.predefinedQueries(),
    ]);
    this.state.sessionId = session.session_id;
    this.state.queries = queries.queries;
    this.notify();
  }

  setComposer(text: string): void {
    this.state.composer = text;
    this.notify();
  }

  /** Selecting a predefined query prefills the composer with that string. */
  prefill(query: string): void {
    this.state.composer = query;
    this.state.retryBanner = null;
    this.notify();
  }

  async send(): Promise<void> {
    const text = this.state.composer.trim();
    if (!text || this.state.pending || !this.state.sessionId) return;
    this.state.pending = true;
    this.state.retryBanner = null;
    this.notify();
    try {
      const reply = await this.api.postMessage(
        this.state.sessionId,
        text,
        this.requestedArtifacts.length ? this.requestedArtifacts : undefined,
      );
      this.state.messages.push({
        email: reply.email,
        timestamp: reply.timestamp,
        role: "user",
        content: text,
      });
      this.state.messages.push({
        email: reply.email,
        timestamp: reply.timestamp,
        role: "assistant",
        content: reply.content,
      });
      this.state.composer = "";
    } catch (err) {
      // keep the composer text so the user can retry
      this.state.retryBanner =
        err instanceof Error ? err.message : "message failed; try again";
    } finally {
      this.state.pending = false;
      this.notify();
    }
  }

  async refreshHistory(): Promise<void> {
    if (!this.state.sessionId) return;
    const { messages } = await this.api.history(this.state.sessionId);
    this.state.messages = messages;
    this.notify();
  }
}
