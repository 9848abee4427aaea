// Wire types for the battle-session protocol: one JSON object per frame.

export type Side = "A" | "B";

export interface AgentSnapshot {
  side: Side;
  x: number;
  z: number;
  hp: number;
  status: string;
}

export interface StateMessage {
  type: "state";
  tick: number;
  agents: AgentSnapshot[];
  projectiles: { x: number; z: number }[];
  paused: boolean;
}

export interface JoinedMessage {
  type: "joined";
  session_id: string;
  player_id: string;
  side: Side;
}

export interface StartMessage {
  type: "start";
  config: Record<string, number>;
}

export interface PausedMessage {
  type: "paused";
  by: Side;
  tick?: number;
}

export interface ResumedMessage {
  type: "resumed";
  tick?: number;
}

// Branch nodes as they appear in branch messages and logs.
export type BranchNode =
  | { kind: "action"; name: string; args: number[] }
  | { kind: "condition"; pred: string; then: BranchNode[]; else: BranchNode[] }
  | { kind: "control"; name: "repeat" | "end" };

export interface BranchMessage {
  type: "branch";
  player: Side;
  command: string;
  branch: { nodes: BranchNode[] };
  latency_ms: number;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export interface EndMessage {
  type: "end";
  winner: Side | "draw";
  reason: "ko" | "timeout" | "forfeit";
}

export type ServerMessage =
  | JoinedMessage
  | StartMessage
  | StateMessage
  | PausedMessage
  | ResumedMessage
  | BranchMessage
  | ErrorMessage
  | EndMessage;

// The complete set of messages a client may ever send.
export type ClientMessage =
  | { type: "join"; session: string; player_name: string }
  | { type: "typing_start" }
  | { type: "typing_cancel" }
  | { type: "command"; text: string };

export const CLIENT_MESSAGE_TYPES = [
  "join",
  "typing_start",
  "typing_cancel",
  "command",
] as const;

export const MAX_COMMAND_CHARS = 500;

export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const type = (obj as { type?: unknown }).type;
  if (typeof type !== "string") return null;
  return obj as ServerMessage;
}
