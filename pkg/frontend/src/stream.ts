/** Reconnecting wrapper over the session stream.
 *
 * The server resends the latest snapshot on every (re)connect, so the
 * client just reopens the socket and keeps applying messages; on reconnect
 * it also asks the owner to resync and flush any queued events.
 */

import type { StreamMessage } from "./types.js";

export interface SocketLike {
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface StreamOptions {
  url: string;
  factory: SocketFactory;
  onMessage(message: StreamMessage): void;
  onReconnect(): void;
  retryDelayMs?: number;
  schedule?: (fn: () => void, ms: number) => void;
}

export class SessionStream {
  private socket: SocketLike | null = null;
  private stopped = false;
  private everConnected = false;

  constructor(private readonly options: StreamOptions) {}

  start(): void {
    this.stopped = false;
    this.connect(false);
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
  }

  private connect(isReconnect: boolean): void {
    if (this.stopped) {
      return;
    }
    const socket = this.options.factory(this.options.url);
    this.socket = socket;
    if (isReconnect && this.everConnected) {
      this.options.onReconnect();
    }
    this.everConnected = true;
    socket.onmessage = (event) => {
      this.options.onMessage(JSON.parse(event.data) as StreamMessage);
    };
    const retry = () => {
      if (this.stopped) {
        return;
      }
      const delay = this.options.retryDelayMs ?? 1000;
      const schedule = this.options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
      schedule(() => this.connect(true), delay);
    };
    socket.onclose = retry;
    socket.onerror = () => socket.close();
  }
}
