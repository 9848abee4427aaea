// Entry point: lobby form, websocket connection, render loop, sidebars.

import { GameConnection } from "./net.js";
import { wireCommandBox } from "./input.js";
import { branchTreeText, interpolateAgents, programText, render } from "./render.js";
import { Side, StateMessage } from "./protocol.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);

const serverInput = el<HTMLInputElement>("server-url");
const sessionInput = el<HTMLInputElement>("session-id");
const nameInput = el<HTMLInputElement>("player-name");
const joinButton = el<HTMLButtonElement>("join-button");
const lobbyForm = el<HTMLDivElement>("lobby");
const lobbyStatus = el<HTMLDivElement>("lobby-status");
const gamePane = el<HTMLDivElement>("game");
const canvas = el<HTMLCanvasElement>("arena");
const commandBox = el<HTMLInputElement>("command-box");
const pauseButton = el<HTMLButtonElement>("pause-type-button");
const sessionLabel = el<HTMLDivElement>("session-label");
const errorLine = el<HTMLDivElement>("error-line");
const branchPanes: Record<Side, HTMLPreElement> = {
  A: el<HTMLPreElement>("branch-a"),
  B: el<HTMLPreElement>("branch-b"),
};

serverInput.value =
  params.get("server") ?? `ws://${window.location.hostname || "127.0.0.1"}:8080`;
sessionInput.value = params.get("session") ?? "new";
nameInput.value = params.get("name") ?? "";

let connection: GameConnection | null = null;
let prevSnapshot: StateMessage | null = null;
let currentSnapshot: StateMessage | null = null;
let snapshotAt = 0;
let snapshotInterval = 100; // ms between snapshots, measured as they arrive

joinButton.addEventListener("click", () => {
  const name = nameInput.value.trim() || "player";
  joinButton.disabled = true;
  lobbyStatus.textContent = "connecting...";
  connection = new GameConnection(
    serverInput.value.trim(),
    sessionInput.value.trim() || "new",
    name,
  );
  connection.onChange = onViewChange;
  wireCommandBox(commandBox, pauseButton, connection);
});

function onViewChange(): void {
  if (!connection) return;
  const view = connection.view;

  if (connection.status === "closed" || connection.status === "error") {
    lobbyStatus.textContent = "connection lost - reload to retry";
    joinButton.disabled = false;
    return;
  }

  if (view.phase === "lobby") {
    lobbyStatus.textContent =
      `joined as side ${view.side}; share session id: ${view.sessionId}`;
  }
  if (view.phase === "battle" || view.phase === "ended") {
    lobbyForm.style.display = "none";
    gamePane.style.display = "block";
    sessionLabel.textContent = `session ${view.sessionId} - you are ${view.side}`;
  }

  if (view.snapshot !== currentSnapshot && view.snapshot !== null) {
    const now = performance.now();
    if (currentSnapshot !== null) {
      snapshotInterval = Math.max(20, Math.min(500, now - snapshotAt));
    }
    prevSnapshot = currentSnapshot;
    currentSnapshot = view.snapshot;
    snapshotAt = now;
  }

  commandBox.disabled = view.commandPending || view.phase === "ended";
  errorLine.textContent = view.lastError
    ? `error (${view.lastError.code}): ${view.lastError.message}`
    : "";

  for (const side of ["A", "B"] as Side[]) {
    const info = view.branches[side];
    if (info) {
      branchPanes[side].textContent =
        `${side}${side === view.side ? " (you)" : ""}: "${info.command}"` +
        ` [${info.latency_ms} ms]\n` +
        `${programText(info.branch.nodes)}\n\n` +
        branchTreeText(info.branch.nodes);
    }
  }
}

function frame(): void {
  if (connection && currentSnapshot) {
    const ctx = canvas.getContext("2d");
    if (ctx) {
      const view = connection.view;
      // linear smoothing between snapshots; frozen exactly while paused
      const alpha = view.paused
        ? 1
        : (performance.now() - snapshotAt) / snapshotInterval;
      const agents = interpolateAgents(prevSnapshot, currentSnapshot, alpha);
      render(ctx, view, agents, canvas.width, canvas.height);
    }
  }
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
