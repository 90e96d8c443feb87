// WebSocket session: parses inbound traffic, keeps the view state current,
// and resyncs with a snapshot request after reconnecting.

import { Command, encodeCommand, parseServerMessage } from "./protocol.js";
import { applySnapshot, applyStep, emptyState, ViewState } from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onopen: ((ev: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export class Session {
  state: ViewState = emptyState();
  private socket: SocketLike | null = null;
  private listeners: Array<(s: ViewState) => void> = [];

  constructor(
    private url: string,
    private factory: SocketFactory,
    private reconnectDelayMs = 800,
    private schedule: (fn: () => void, ms: number) => void = (fn, ms) => setTimeout(fn, ms),
  ) {}

  onChange(fn: (s: ViewState) => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  connect(): void {
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      // the server greets with a snapshot; ask again in case we raced
      socket.send(encodeCommand({ type: "snapshot" }));
    };
    socket.onmessage = (ev) => {
      const msg = parseServerMessage(ev.data);
      if (msg === null) return; // garbage frames never reach the view
      switch (msg.type) {
        case "snapshot":
          this.state = applySnapshot(this.state, msg);
          break;
        case "step":
          this.state = applyStep(this.state, msg);
          break;
        case "error":
          this.state = { ...this.state, lastError: `${msg.code}: ${msg.message}` };
          break;
        case "bye":
          this.state = { ...this.state, connected: false, lastError: msg.reason };
          socket.close();
          break;
      }
      this.emit();
    };
    socket.onclose = () => {
      this.state = { ...this.state, connected: false };
      this.emit();
      this.schedule(() => this.connect(), this.reconnectDelayMs);
    };
  }

  send(cmd: Command): void {
    this.socket?.send(encodeCommand(cmd));
  }
}
