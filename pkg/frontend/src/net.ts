// Connection wrapper: owns one websocket, folds incoming frames into the
// view, and guards the outbound side so nothing but the four client
// message types can ever leave (anything else is a programming defect).

import { ClientMessage, CLIENT_MESSAGE_TYPES, parseServerMessage } from "./protocol.js";
import {
  ClientView,
  commandMessage,
  initialView,
  joinMessage,
  markCommandSent,
  reduce,
  typingCancelMessage,
  typingStartMessage,
} from "./state.js";

export interface WsLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type WsFactory = (url: string) => WsLike;

export type ConnectionStatus = "connecting" | "open" | "closed" | "error";

export class GameConnection {
  view: ClientView = initialView;
  status: ConnectionStatus = "connecting";
  onChange: (view: ClientView) => void = () => {};
  private ws: WsLike;
  private sentTypes = new Set<string>();

  constructor(
    url: string,
    session: string,
    playerName: string,
    wsFactory?: WsFactory,
  ) {
    const factory =
      wsFactory ?? ((u: string) => new WebSocket(u) as unknown as WsLike);
    this.ws = factory(url);
    this.ws.onopen = () => {
      this.status = "open";
      this.send(joinMessage(session, playerName));
    };
    this.ws.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg === null) return;
      this.view = reduce(this.view, msg);
      this.onChange(this.view);
    };
    this.ws.onclose = () => {
      if (this.status !== "error") this.status = "closed";
      this.onChange(this.view);
    };
    this.ws.onerror = () => {
      this.status = "error";
      this.onChange(this.view);
    };
  }

  startTyping(): void {
    this.send(typingStartMessage());
  }

  cancelTyping(): void {
    this.send(typingCancelMessage());
  }

  /** Returns false when the text is rejected client-side (empty/too long). */
  submitCommand(text: string): boolean {
    const check = commandMessage(text);
    if (!check.ok) return false;
    this.send(check.msg);
    this.view = markCommandSent(this.view);
    this.onChange(this.view);
    return true;
  }

  close(): void {
    this.ws.close();
  }

  /** Every message type this connection has ever emitted (for tests). */
  get emittedTypes(): string[] {
    return [...this.sentTypes];
  }

  private send(msg: ClientMessage): void {
    if (!(CLIENT_MESSAGE_TYPES as readonly string[]).includes(msg.type)) {
      throw new Error(`attempted to send non-protocol message ${msg.type}`);
    }
    this.sentTypes.add(msg.type);
    this.ws.send(JSON.stringify(msg));
  }
}
