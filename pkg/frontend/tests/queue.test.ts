/** Offline behaviour: events queue locally while the service is down and
 * flush in order on reconnect; service rejections are never swallowed. */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { EventQueue } from "../src/queue.js";
import { SessionStream } from "../src/stream.js";
import { ServiceStub } from "./stub.js";
import type { InteractionEventWire, StreamMessage } from "../src/types.js";

function event(subject: string, ts: number): InteractionEventWire {
  return { kind: "overlap", subject, object: "dX", timestamp: ts };
}

describe("event queue", () => {
  it("queues while offline and flushes in order on reconnect", async () => {
    const stub = new ServiceStub();
    const queue = new EventQueue(new ApiClient("http://svc", stub.transport), "fixture-session");

    stub.offline = true;
    expect(await queue.send(event("d0", 1))).toBeNull();
    expect(await queue.send(event("d1", 2))).toBeNull();
    expect(queue.size).toBe(2);
    expect(queue.offline).toBe(true);

    stub.offline = false;
    const snap = await queue.flush();
    expect(snap).not.toBeNull();
    expect(queue.size).toBe(0);
    expect(stub.posted().map((r) => (r.body as InteractionEventWire).timestamp)).toEqual([1, 2]);
  });

  it("does not queue service rejections", async () => {
    const rejecting = new ApiClient("http://svc", async () => ({
      status: 409,
      json: async () => ({ detail: "conflict" }),
    }));
    const queue = new EventQueue(rejecting, "fixture-session");
    await expect(queue.send(event("d0", 1))).rejects.toThrow("conflict");
    expect(queue.size).toBe(0);
  });
});

describe("session stream", () => {
  it("reconnects after a drop and resyncs via the callback", async () => {
    const sockets: { onmessage: ((e: { data: string }) => void) | null; onclose: (() => void) | null; onerror: (() => void) | null; close(): void }[] = [];
    const messages: StreamMessage[] = [];
    let reconnects = 0;
    const pending: (() => void)[] = [];

    const stream = new SessionStream({
      url: "ws://svc/sessions/s/stream",
      factory: () => {
        const socket = {
          onmessage: null as ((e: { data: string }) => void) | null,
          onclose: null as (() => void) | null,
          onerror: null as (() => void) | null,
          close() {
            this.onclose?.();
          },
        };
        sockets.push(socket);
        return socket;
      },
      onMessage: (m) => messages.push(m),
      onReconnect: () => {
        reconnects += 1;
      },
      schedule: (fn) => pending.push(fn),
    });

    stream.start();
    expect(sockets.length).toBe(1);
    sockets[0].onmessage!({
      data: JSON.stringify({ v: 1, type: "training_progress", payload: {} }),
    });
    expect(messages.length).toBe(1);

    sockets[0].onclose!(); // server drop
    expect(pending.length).toBe(1);
    pending.shift()!(); // retry timer fires
    expect(sockets.length).toBe(2);
    expect(reconnects).toBe(1);

    stream.stop();
  });
});
