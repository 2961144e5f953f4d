/**
 * Session controller: owns the label -> next -> state round-trip.
 *
 * One request in flight at a time; submissions are disabled until the server
 * acknowledges, and nothing is rendered optimistically. A failed submit
 * leaves the pending query untouched and surfaces a retry affordance.
 */

import { ApiError, SessionClient } from "./client.js";
import type { PendingQuery, SessionState } from "./types.js";

export interface ControllerSnapshot {
  state: SessionState | null;
  pending: PendingQuery | null;
  busy: boolean;
  finished: boolean;
  finishReason: string | null;
  inlineError: string | null;
  canRetry: boolean;
}

export type Listener = (snapshot: ControllerSnapshot) => void;

export class SessionController {
  private readonly client: SessionClient;
  private readonly sessionId: string;
  private state: SessionState | null = null;
  private pending: PendingQuery | null = null;
  private busy = false;
  private finished = false;
  private finishReason: string | null = null;
  private inlineError: string | null = null;
  private canRetry = false;
  private lastOutcome: number | null = null;
  private readonly listeners: Listener[] = [];

  constructor(client: SessionClient, sessionId: string) {
    this.client = client;
    this.sessionId = sessionId;
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  snapshot(): ControllerSnapshot {
    return {
      state: this.state,
      pending: this.pending,
      busy: this.busy,
      finished: this.finished,
      finishReason: this.finishReason,
      inlineError: this.inlineError,
      canRetry: this.canRetry,
    };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) {
      listener(snap);
    }
  }

  /** Initial load (and reload): state first, then the pending query. */
  async refresh(): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    this.emit();
    try {
      this.state = await this.client.getState(this.sessionId);
      if (this.state.terminal !== null) {
        this.finished = true;
        this.finishReason = this.state.terminal;
        this.pending = null;
      } else {
        await this.pullNext();
      }
      this.inlineError = null;
      this.canRetry = false;
    } catch (error) {
      this.rememberError(error, "refresh");
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  private async pullNext(): Promise<void> {
    try {
      this.pending = await this.client.nextQuery(this.sessionId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 410) {
        this.finished = true;
        this.finishReason = error.message;
        this.pending = null;
        return;
      }
      throw error;
    }
  }

  /**
   * Submit an outcome for the pending query, then pull the next query and
   * the updated state. No-op while a request is in flight (double-clicks
   * collapse into the server-side idempotent pair at worst).
   */
  async submit(outcome: number): Promise<void> {
    if (this.busy || this.pending === null || this.finished) {
      return;
    }
    const instanceId = this.pending.instance_id;
    this.busy = true;
    this.lastOutcome = outcome;
    this.emit();
    try {
      await this.client.submitLabel(this.sessionId, instanceId, outcome);
      this.pending = null;
      this.inlineError = null;
      this.canRetry = false;
      this.state = await this.client.getState(this.sessionId);
      if (this.state.terminal !== null) {
        this.finished = true;
        this.finishReason = this.state.terminal;
      } else {
        await this.pullNext();
      }
    } catch (error) {
      this.rememberError(error, "submit");
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  /** Re-send the last outcome after a network failure (idempotent server-side). */
  async retry(): Promise<void> {
    if (this.lastOutcome === null || this.pending === null) {
      return this.refresh();
    }
    const outcome = this.lastOutcome;
    this.inlineError = null;
    this.canRetry = false;
    await this.submit(outcome);
  }

  private rememberError(error: unknown, phase: string): void {
    if (error instanceof ApiError) {
      // 409/422 are user-visible protocol conflicts, not fatal conditions
      this.inlineError = `${error.code}: ${error.message}`;
      this.canRetry = error.status >= 500;
      if (error.status === 409) {
        // the server disagrees about what is pending: resync on next action
        this.pending = null;
      }
    } else {
      this.inlineError = `network failure during ${phase}; your label was not lost`;
      this.canRetry = true;
    }
  }
}

export async function startSession(
  client: SessionClient,
  config: Record<string, unknown>,
): Promise<SessionController> {
  const sessionId = await client.createSession(config);
  const controller = new SessionController(client, sessionId);
  await controller.refresh();
  return controller;
}
