// WebSocket wrapper: connection state, auto-reconnect with exponential
// backoff (capped at 10 s), a stale-state badge after 5 s of silence, and a
// send guard so nothing is emitted while disconnected.

import { encodeMessage, parseEvent } from "./protocol.js";
import type { ClientMessage, ServerEvent } from "./protocol.js";

export type Status = "disconnected" | "connecting" | "connected";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export interface ControlSocketOptions {
  onEvent?: (ev: ServerEvent) => void;
  onFrame?: (png: Blob | ArrayBuffer) => void;
  onStatus?: (status: Status) => void;
  onStale?: (stale: boolean) => void;
  staleMs?: number;
  initialBackoffMs?: number;
  maxBackoffMs?: number;
  factory?: (url: string) => SocketLike;
}

const defaultFactory = (url: string): SocketLike =>
  new WebSocket(url) as unknown as SocketLike;

export class ControlSocket {
  readonly endpoint: string;
  status: Status = "disconnected";
  lastEvent: ServerEvent | null = null;

  private opts: Required<Pick<ControlSocketOptions, "staleMs" | "initialBackoffMs" | "maxBackoffMs">> &
    ControlSocketOptions;
  private ws: SocketLike | null = null;
  private backoffMs: number;
  private staleTimer: ReturnType<typeof setTimeout> | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private closed = false;

  constructor(endpoint: string, options: ControlSocketOptions = {}) {
    this.endpoint = endpoint;
    this.opts = {
      staleMs: 5000,
      initialBackoffMs: 500,
      maxBackoffMs: 10_000,
      ...options,
    };
    this.backoffMs = this.opts.initialBackoffMs;
  }

  connect(): void {
    if (this.closed || this.ws) return;
    this.setStatus("connecting");
    const factory = this.opts.factory ?? defaultFactory;
    let ws: SocketLike;
    try {
      ws = factory(this.endpoint);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.ws = ws;
    ws.onopen = () => {
      this.backoffMs = this.opts.initialBackoffMs;
      this.setStatus("connected");
      this.armStaleTimer();
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data !== "string") {
        this.opts.onFrame?.(ev.data as Blob | ArrayBuffer);
        return;
      }
      const parsed = parseEvent(ev.data);
      if (parsed === null) {
        console.warn("ignoring malformed event", ev.data);
        return;
      }
      this.lastEvent = parsed;
      this.armStaleTimer();
      this.opts.onStale?.(false);
      this.opts.onEvent?.(parsed);
    };
    ws.onerror = () => {
      // onclose follows; nothing to do beyond logging
      console.warn("control socket error");
    };
    ws.onclose = () => {
      this.ws = null;
      this.setStatus("disconnected");
      this.clearStaleTimer();
      this.scheduleReconnect();
    };
  }

  // Commands are sendable only when connected; callers surface the refusal.
  send(msg: ClientMessage): boolean {
    if (this.status !== "connected" || !this.ws) return false;
    this.ws.send(encodeMessage(msg));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.clearStaleTimer();
    this.ws?.close();
    this.ws = null;
    this.setStatus("disconnected");
  }

  private setStatus(status: Status): void {
    if (this.status !== status) {
      this.status = status;
      this.opts.onStatus?.(status);
    }
  }

  private scheduleReconnect(): void {
    if (this.closed || this.reconnectTimer) return;
    const delay = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, this.opts.maxBackoffMs);
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, delay);
  }

  private armStaleTimer(): void {
    this.clearStaleTimer();
    this.staleTimer = setTimeout(() => this.opts.onStale?.(true), this.opts.staleMs);
  }

  private clearStaleTimer(): void {
    if (this.staleTimer) {
      clearTimeout(this.staleTimer);
      this.staleTimer = null;
    }
  }
}
