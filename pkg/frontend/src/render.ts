// Canvas rendering: a top-down 2D projection of the arena plus HP bars and
// overlays, drawn purely from the current view (no client-side game logic).

import { AgentSnapshot, BranchNode, StateMessage } from "./protocol.js";
import { ClientView } from "./state.js";

const AGENT_COLORS: Record<string, string> = { A: "#4da3ff", B: "#ff6b5e" };
const ARENA_HALF = 20; // meters; matches the server's default config

export function interpolateAgents(
  prev: StateMessage | null,
  current: StateMessage,
  alpha: number,
): AgentSnapshot[] {
  if (prev === null || alpha >= 1) return current.agents;
  const a = Math.max(0, Math.min(1, alpha));
  return current.agents.map((agent) => {
    const before = prev.agents.find((p) => p.side === agent.side);
    if (!before) return agent;
    return {
      ...agent,
      x: before.x + (agent.x - before.x) * a,
      z: before.z + (agent.z - before.z) * a,
    };
  });
}

export function render(
  ctx: CanvasRenderingContext2D,
  view: ClientView,
  agents: AgentSnapshot[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141d";
  ctx.fillRect(0, 0, width, height);

  const half =
    view.config !== null && view.config.arena_half_extent
      ? view.config.arena_half_extent
      : ARENA_HALF;
  const scale = Math.min(width, height) / (2 * half + 2);
  const sx = (x: number) => width / 2 + x * scale;
  const sy = (z: number) => height / 2 + z * scale;

  // arena border and center line
  ctx.strokeStyle = "#2d4a6d";
  ctx.lineWidth = 2;
  ctx.strokeRect(sx(-half), sy(-half), 2 * half * scale, 2 * half * scale);
  ctx.strokeStyle = "#1b2635";
  ctx.beginPath();
  ctx.moveTo(sx(0), sy(-half));
  ctx.lineTo(sx(0), sy(half));
  ctx.stroke();

  const snapshot = view.snapshot;
  if (snapshot === null) {
    ctx.fillStyle = "#9fb5cc";
    ctx.font = "16px monospace";
    ctx.textAlign = "center";
    ctx.fillText("waiting for opponent...", width / 2, height / 2);
    return;
  }

  // projectiles
  ctx.fillStyle = "#ffd34d";
  for (const proj of snapshot.projectiles) {
    ctx.beginPath();
    ctx.arc(sx(proj.x), sy(proj.z), Math.max(2, 0.5 * scale), 0, 2 * Math.PI);
    ctx.fill();
  }

  // agents as circles with a facing tick toward the opponent
  for (const agent of agents) {
    const other = agents.find((a) => a.side !== agent.side);
    ctx.fillStyle = AGENT_COLORS[agent.side] ?? "#ffffff";
    ctx.beginPath();
    ctx.arc(sx(agent.x), sy(agent.z), Math.max(3, 0.5 * scale), 0, 2 * Math.PI);
    ctx.fill();
    if (other) {
      const dx = other.x - agent.x;
      const dz = other.z - agent.z;
      const norm = Math.hypot(dx, dz);
      if (norm > 0) {
        ctx.strokeStyle = "#e6f3ff";
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.moveTo(sx(agent.x), sy(agent.z));
        ctx.lineTo(
          sx(agent.x + (dx / norm) * 0.9),
          sy(agent.z + (dz / norm) * 0.9),
        );
        ctx.stroke();
      }
    }
    if (agent.status !== "normal") {
      ctx.fillStyle = "#9fb5cc";
      ctx.font = "11px monospace";
      ctx.textAlign = "center";
      ctx.fillText(agent.status, sx(agent.x), sy(agent.z) - 0.9 * scale);
    }
  }

  drawHpBars(ctx, agents, width);

  if (view.paused && view.end === null) {
    ctx.fillStyle = "rgba(9, 11, 16, 0.55)";
    ctx.fillRect(0, 0, width, height);
    ctx.fillStyle = "#e6f3ff";
    ctx.font = "20px monospace";
    ctx.textAlign = "center";
    const by = view.pausedBy ? ` by ${view.pausedBy}` : "";
    ctx.fillText(`paused${by}`, width / 2, height / 2);
  }

  if (view.end !== null) {
    ctx.fillStyle = "rgba(9, 11, 16, 0.7)";
    ctx.fillRect(0, 0, width, height);
    ctx.fillStyle = "#ffd34d";
    ctx.font = "24px monospace";
    ctx.textAlign = "center";
    const text =
      view.end.winner === "draw"
        ? `draw (${view.end.reason})`
        : `${view.end.winner} wins (${view.end.reason})`;
    ctx.fillText(text, width / 2, height / 2);
  }
}

function drawHpBars(
  ctx: CanvasRenderingContext2D,
  agents: AgentSnapshot[],
  width: number,
): void {
  const barWidth = width * 0.38;
  for (const agent of agents) {
    const left = agent.side === "A" ? 12 : width - 12 - barWidth;
    const frac = Math.max(0, Math.min(1, agent.hp / 100));
    ctx.fillStyle = "#1b2635";
    ctx.fillRect(left, 10, barWidth, 14);
    ctx.fillStyle = AGENT_COLORS[agent.side] ?? "#ffffff";
    ctx.fillRect(left, 10, barWidth * frac, 14);
    ctx.strokeStyle = "#2d4a6d";
    ctx.strokeRect(left, 10, barWidth, 14);
    ctx.fillStyle = "#e6f3ff";
    ctx.font = "11px monospace";
    ctx.textAlign = agent.side === "A" ? "left" : "right";
    ctx.fillText(
      `${agent.side} ${Math.round(agent.hp)}`,
      agent.side === "A" ? left + 4 : left + barWidth - 4,
      21,
    );
  }
}

// --- branch display ---------------------------------------------------

export function programText(nodes: BranchNode[]): string {
  return `branch([${nodes.map(nodeText).join(", ")}])`;
}

function nodeText(node: BranchNode): string {
  if (node.kind === "action") {
    const args = node.args.map((a) => `, ${formatNumber(a)}`).join("");
    return `action("${node.name}"${args})`;
  }
  if (node.kind === "condition") {
    const then = node.then.map(nodeText).join(", ");
    const otherwise = node.else.map(nodeText).join(", ");
    return `condition("${node.pred}", [${then}], [${otherwise}])`;
  }
  return `control("${node.name}")`;
}

function formatNumber(x: number): string {
  return Number.isInteger(x) ? String(x) : String(x);
}

/** Indented tree view of a branch, one node per line. */
export function branchTreeText(nodes: BranchNode[], indent = 0): string {
  const pad = "  ".repeat(indent);
  const lines: string[] = [];
  for (const node of nodes) {
    if (node.kind === "action") {
      const args = node.args.length ? ` ${node.args.join(" ")}` : "";
      lines.push(`${pad}action ${node.name}${args}`);
    } else if (node.kind === "condition") {
      lines.push(`${pad}if ${node.pred}`);
      lines.push(`${pad}  then:`);
      if (node.then.length) lines.push(branchTreeText(node.then, indent + 2));
      lines.push(`${pad}  else:`);
      if (node.else.length) lines.push(branchTreeText(node.else, indent + 2));
    } else {
      lines.push(`${pad}${node.name}`);
    }
  }
  return lines.join("\n");
}
