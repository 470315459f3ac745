// Websocket client with automatic reconnect.  The WebSocket constructor is
// injectable so the same class runs in the browser and under node tests.

import { ClientMsg, encodeClientMessage, parseServerMessage, ServerMsg } from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface CockpitClientOptions {
  wsFactory?: WebSocketFactory;
  onMessage?: (msg: ServerMsg) => void;
  onStatus?: (status: "connecting" | "open" | "closed") => void;
  backoffMs?: number[];
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
}

const DEFAULT_BACKOFF = [500, 1000, 2000, 5000];

export class CockpitClient {
  private ws: WebSocketLike | null = null;
  private attempt = 0;
  private closedByUser = false;
  connected = false;

  constructor(
    readonly url: string,
    private readonly opts: CockpitClientOptions = {},
  ) {}

  connect(): void {
    this.closedByUser = false;
    this.opts.onStatus?.("connecting");
    const factory =
      this.opts.wsFactory ?? ((u: string) => new WebSocket(u) as unknown as WebSocketLike);
    const ws = factory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.connected = true;
      this.attempt = 0;
      this.opts.onStatus?.("open");
    };
    ws.onmessage = (ev) => {
      try {
        this.opts.onMessage?.(parseServerMessage(String(ev.data)));
      } catch {
        // a malformed frame must never take the console down
      }
    };
    ws.onerror = () => {
      /* close follows */
    };
    ws.onclose = () => {
      this.connected = false;
      this.opts.onStatus?.("closed");
      this.ws = null;
      if (!this.closedByUser) this.scheduleRetry();
    };
  }

  private scheduleRetry(): void {
    const backoff = this.opts.backoffMs ?? DEFAULT_BACKOFF;
    const delay = backoff[Math.min(this.attempt, backoff.length - 1)];
    this.attempt += 1;
    const later = this.opts.setTimeoutFn ?? ((fn: () => void, ms: number) => setTimeout(fn, ms));
    later(() => {
      if (!this.closedByUser) this.connect();
    }, delay);
  }

  send(msg: ClientMsg): boolean {
    if (!this.ws || !this.connected) return false;
    this.ws.send(encodeClientMessage(msg));
    return true;
  }

  close(): void {
    this.closedByUser = true;
    this.ws?.close();
  }
}
