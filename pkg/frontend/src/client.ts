/**
 * WebSocket transport: JSON messages, auto-reconnect with exponential
 * backoff, and replay of strokes that completed while disconnected. A
 * stroke drawn offline is buffered and sent after the session reopens, so
 * the server-side gate sees it in order.
 */

import { ClientMessage, ServerMessage } from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
}

export type SocketFactory = (url: string) => WebSocketLike;

export interface ClientOptions {
  url: string;
  socketFactory?: SocketFactory;
  onMessage: (message: ServerMessage) => void;
  onStatus?: (status: "connected" | "disconnected" | "reconnecting") => void;
  minBackoffMs?: number;
  maxBackoffMs?: number;
}

export class GuidanceClient {
  private socket: WebSocketLike | null = null;
  private sessionId: string | null = null;
  private connected = false;
  private closedByUser = false;
  private backoffMs: number;
  private readonly minBackoffMs: number;
  private readonly maxBackoffMs: number;
  private pendingStrokes: ClientMessage[] = [];
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private readonly options: ClientOptions) {
    this.minBackoffMs = options.minBackoffMs ?? 1000;
    this.maxBackoffMs = options.maxBackoffMs ?? 30000;
    this.backoffMs = this.minBackoffMs;
  }

  get isConnected(): boolean {
    return this.connected;
  }

  get bufferedStrokeCount(): number {
    return this.pendingStrokes.length;
  }

  connect(): void {
    this.closedByUser = false;
    const factory =
      this.options.socketFactory ??
      ((url: string) => new WebSocket(url) as unknown as WebSocketLike);
    const socket = factory(this.options.url);
    this.socket = socket;

    socket.onopen = () => {
      this.connected = true;
      this.backoffMs = this.minBackoffMs;
      this.options.onStatus?.("connected");
      this.sendRaw({ type: "open_session", session_id: this.sessionId ?? undefined });
      const queued = this.pendingStrokes;
      this.pendingStrokes = [];
      for (const message of queued) this.sendRaw(message);
    };

    socket.onmessage = (ev) => {
      let message: ServerMessage;
      try {
        message = JSON.parse(ev.data) as ServerMessage;
      } catch {
        return;
      }
      if (message.type === "session_opened") {
        this.sessionId = message.session_id;
      }
      this.options.onMessage(message);
    };

    socket.onclose = () => this.handleDrop();
    socket.onerror = () => this.handleDrop();
  }

  private handleDrop(): void {
    if (!this.socket) return;
    this.socket = null;
    this.connected = false;
    if (this.closedByUser) {
      this.options.onStatus?.("disconnected");
      return;
    }
    this.options.onStatus?.("reconnecting");
    this.reconnectTimer = setTimeout(() => this.connect(), this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, this.maxBackoffMs);
  }

  disconnect(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
    this.connected = false;
    this.options.onStatus?.("disconnected");
  }

  private sendRaw(message: ClientMessage): void {
    this.socket?.send(JSON.stringify(message));
  }

  /** Send a message; stroke ends are buffered while offline, others drop. */
  send(message: ClientMessage): void {
    if (this.connected && this.socket) {
      this.sendRaw(message);
      return;
    }
    if (message.type === "stroke_end") {
      this.pendingStrokes.push(message);
    }
  }
}
