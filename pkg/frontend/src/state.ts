// Pure client state: every user-visible value is a fold over server
// messages (plus two local events for the command box).  The reducer never
// invents game state — positions, HP and pause all come from snapshots and
// broadcasts, and a stale snapshot (tick older than what we have) is
// dropped so out-of-order delivery cannot move time backwards.

import {
  BranchMessage,
  ErrorMessage,
  MAX_COMMAND_CHARS,
  ClientMessage,
  ServerMessage,
  Side,
  StateMessage,
} from "./protocol.js";

export type Phase = "connecting" | "lobby" | "battle" | "ended";

export interface ClientView {
  phase: Phase;
  sessionId: string | null;
  playerId: string | null;
  side: Side | null;
  config: Record<string, number> | null;
  snapshot: StateMessage | null;
  paused: boolean;
  pausedBy: Side | null;
  commandPending: boolean; // box disabled until branch/error arrives
  branches: { A: BranchMessage | null; B: BranchMessage | null };
  lastError: ErrorMessage | null;
  end: { winner: string; reason: string } | null;
}

export const initialView: ClientView = {
  phase: "connecting",
  sessionId: null,
  playerId: null,
  side: null,
  config: null,
  snapshot: null,
  paused: false,
  pausedBy: null,
  commandPending: false,
  branches: { A: null, B: null },
  lastError: null,
  end: null,
};

export function reduce(view: ClientView, msg: ServerMessage): ClientView {
  switch (msg.type) {
    case "joined":
      return {
        ...view,
        phase: "lobby",
        sessionId: msg.session_id,
        playerId: msg.player_id,
        side: msg.side,
      };
    case "start":
      return { ...view, phase: "battle", config: msg.config };
    case "state": {
      if (view.snapshot !== null && msg.tick < view.snapshot.tick) {
        return view; // stale snapshot: ignore
      }
      return { ...view, snapshot: msg, paused: msg.paused };
    }
    case "paused":
      return { ...view, paused: true, pausedBy: msg.by };
    case "resumed":
      return { ...view, paused: false, pausedBy: null };
    case "branch": {
      const branches = { ...view.branches, [msg.player]: msg };
      const commandPending =
        msg.player === view.side ? false : view.commandPending;
      return { ...view, branches, commandPending };
    }
    case "error":
      return { ...view, lastError: msg, commandPending: false };
    case "end":
      return {
        ...view,
        phase: "ended",
        end: { winner: msg.winner, reason: msg.reason },
        paused: false,
        commandPending: false,
      };
    default:
      return view;
  }
}

// Local command-box events (not server driven).
export function markCommandSent(view: ClientView): ClientView {
  return { ...view, commandPending: true, lastError: null };
}

// Outbound message builders: the only four shapes a client may emit.
export function joinMessage(session: string, playerName: string): ClientMessage {
  return { type: "join", session, player_name: playerName };
}

export function typingStartMessage(): ClientMessage {
  return { type: "typing_start" };
}

export function typingCancelMessage(): ClientMessage {
  return { type: "typing_cancel" };
}

export type CommandCheck =
  | { ok: true; msg: ClientMessage }
  | { ok: false; reason: "empty" | "too_long" };

export function commandMessage(text: string): CommandCheck {
  const trimmed = text.trim();
  if (!trimmed) return { ok: false, reason: "empty" };
  if (trimmed.length > MAX_COMMAND_CHARS) return { ok: false, reason: "too_long" };
  return { ok: true, msg: { type: "command", text: trimmed } };
}
