/** Session flow logic: label submission, undo, refresh. No local belief math;
 * the server payload is the single source of truth. */

import type { SessionApi } from "./api.js";
import type { StatePayload } from "./types.js";

export type FlowStatus =
  | { kind: "ok" }
  | { kind: "retry"; message: string } // network failure: ask the user to retry
  | { kind: "refetched"; message: string } // conflict: view reset to server truth
  | { kind: "failed"; message: string };

export class SessionController {
  payload: StatePayload | null = null;
  private inFlight = false;

  constructor(private api: SessionApi, private sessionId: string) {}

  async refresh(): Promise<FlowStatus> {
    const result = await this.api.getState(this.sessionId);
    if (result.kind === "ok") {
      this.payload = result.payload;
      return { kind: "ok" };
    }
    if (result.kind === "network") return { kind: "retry", message: result.message };
    return { kind: "failed", message: result.message };
  }

  /** Submit a label for the pending query, carrying the step token
   * (step_count + 1) so a double submission cannot advance the state twice. */
  async submit(classIndex: number): Promise<FlowStatus> {
    if (!this.payload || !this.payload.pending_query) {
      return { kind: "failed", message: "no pending query" };
    }
    if (this.inFlight) return { kind: "ok" }; // ignore double-clicks mid-flight
    this.inFlight = true;
    try {
      const step = this.payload.step_count + 1;
      const itemId = this.payload.pending_query.item_id;
      const result = await this.api.submitLabel(this.sessionId, step, itemId, classIndex);
      if (result.kind === "ok") {
        this.payload = result.payload;
        return { kind: "ok" };
      }
      if (result.kind === "network") {
        // no optimistic mutation happened; the user may simply retry
        return { kind: "retry", message: result.message };
      }
      if (result.kind === "conflict") {
        const refreshed = await this.refresh();
        return refreshed.kind === "ok"
          ? { kind: "refetched", message: result.message }
          : refreshed;
      }
      return { kind: "failed", message: result.message };
    } finally {
      this.inFlight = false;
    }
  }

  async undo(): Promise<FlowStatus> {
    const result = await this.api.undo(this.sessionId);
    if (result.kind === "ok") {
      this.payload = result.payload;
      return { kind: "ok" };
    }
    if (result.kind === "network") return { kind: "retry", message: result.message };
    if (result.kind === "conflict") return { kind: "failed", message: result.message };
    return { kind: "failed", message: result.message };
  }
}
