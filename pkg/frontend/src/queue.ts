/** Offline event queue.
 *
 * Feedback must never be dropped or reordered: when the service is
 * unreachable events are held here and flushed first-in-first-out once a
 * send succeeds again.
 */

import { ApiError } from "./api.js";
import type { ApiClient } from "./api.js";
import type { InteractionEventWire, SatisfactionSnapshot } from "./types.js";

export class EventQueue {
  private pending: InteractionEventWire[] = [];

  constructor(
    private readonly client: ApiClient,
    private readonly sessionId: string,
  ) {}

  get size(): number {
    return this.pending.length;
  }

  get offline(): boolean {
    return this.pending.length > 0;
  }

  /** Send now, or hold the event if the transport fails. 4xx responses are
   * real answers (conflicts, unknown ids) and are re-thrown, not queued. */
  async send(event: InteractionEventWire): Promise<SatisfactionSnapshot | null> {
    if (this.pending.length > 0) {
      this.pending.push(event);
      return null;
    }
    try {
      return await this.client.postEvent(this.sessionId, event);
    } catch (error) {
      if (isTransportError(error)) {
        this.pending.push(event);
        return null;
      }
      throw error;
    }
  }

  /** Flush in order; stops at the first transport failure. */
  async flush(): Promise<SatisfactionSnapshot | null> {
    let last: SatisfactionSnapshot | null = null;
    while (this.pending.length > 0) {
      const event = this.pending[0];
      try {
        last = await this.client.postEvent(this.sessionId, event);
      } catch (error) {
        if (isTransportError(error)) {
          return last;
        }
        this.pending.shift(); // rejected by the service: drop and continue
        throw error;
      }
      this.pending.shift();
    }
    return last;
  }
}

function isTransportError(error: unknown): boolean {
  // an ApiError means the service answered (conflict, unknown id, ...);
  // anything else is the transport failing underneath us
  return !(error instanceof ApiError);
}
