"""Battle session state machine: two players, one authoritative world.

This module is transport-free.  Handlers take a message (or a tick, or a
translation outcome) and return a list of effects — messages to send,
log records to append, translations to start, the session ending — which
the network runtime executes.  That keeps every protocol rule testable
without a socket.

Pause semantics: the world is paused exactly while someone is typing or a
translation is in flight.  Command effects are atomic — the game resumes
only after the translated branch was applied (or the command rejected),
so no tick ever lands between a ``paused`` broadcast and its ``resumed``.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from typing import Union

from . import engine
from .branches import encode_json
from .engine import BattleConfig, Outcome, WorldState
from .logstore import CommandLogRecord
from .translator import TranslationError, TranslationResult
from .vm import VmState

PROTOCOL_CLIENT_TYPES = ("join", "typing_start", "typing_cancel", "command")


@dataclass(frozen=True)
class SendTo:
    player_id: str
    message: dict


@dataclass(frozen=True)
class Broadcast:
    message: dict


@dataclass(frozen=True)
class AppendLog:
    record: CommandLogRecord


@dataclass(frozen=True)
class StartTranslation:
    player_id: str
    command_text: str


@dataclass(frozen=True)
class SessionOver:
    reason: str


Effect = Union[SendTo, Broadcast, AppendLog, StartTranslation, SessionOver]


@dataclass
class Player:
    player_id: str
    name: str
    side: str
    typing: bool = False
    pending_command: str | None = None
    connected: bool = True
    disconnected_at: float | None = None


def _now_ms() -> int:
    return time.time_ns() // 1_000_000


@dataclass
class SessionTuning:
    pause_cap_s: float = 60.0
    forfeit_grace_s: float = 15.0
    snapshot_every: int = 2  # ticks between state broadcasts (10 Hz at 20 Hz sim)


class BattleSession:
    """Owns the world, both VMs, and the pause/command bookkeeping for one
    two-player battle.  All handlers must be called from a single task."""

    def __init__(
        self,
        session_id: str,
        config: BattleConfig,
        seed: int,
        tuning: SessionTuning | None = None,
        now_ms=_now_ms,
        clock=time.monotonic,
    ):
        self.session_id = session_id
        self.config = config
        self.seed = seed
        self.tuning = tuning or SessionTuning()
        self.now_ms = now_ms
        self.clock = clock
        self.players: dict[str, Player] = {}
        self.world: WorldState | None = None
        self.vms: dict[str, VmState] = {}
        self.phase = "lobby"  # lobby | running | ended
        self.pause_started_wall: float | None = None

    # -- lobby ---------------------------------------------------------

    def add_player(self, player_id: str, name: str) -> list[Effect]:
        assert len(self.players) < 2, "session full"
        side = "A" if not self.players else "B"
        self.players[player_id] = Player(player_id, name, side)
        effects: list[Effect] = [
            SendTo(
                player_id,
                {
                    "type": "joined",
                    "session_id": self.session_id,
                    "player_id": player_id,
                    "side": side,
                },
            )
        ]
        if len(self.players) == 2:
            self.world = engine.new_battle(self.config, self.seed)
            timings = self.config.timings()
            self.vms = {"A": VmState(timings), "B": VmState(timings)}
            self.phase = "running"
            effects.append(
                Broadcast(
                    {"type": "start", "config": _config_obj(self.config)}
                )
            )
            effects.append(Broadcast(engine.snapshot(self.world)))
        return effects

    @property
    def is_full(self) -> bool:
        return len(self.players) >= 2

    # -- client messages -------------------------------------------------

    def handle_message(self, player_id: str, msg: object) -> list[Effect]:
        player = self.players.get(player_id)
        if player is None:
            return [SendTo(player_id, _error("not_joined", "join first"))]
        if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
            return [SendTo(player_id, _error("bad_message", "not a protocol object"))]
        mtype = msg["type"]
        if mtype == "typing_start":
            if self.phase != "running":
                return []  # nothing to pause yet
            player.typing = True
            return self._pause_transition(by=player.side)
        if mtype == "typing_cancel":
            player.typing = False
            return self._pause_transition(by=player.side)
        if mtype == "command":
            return self._handle_command(player, msg)
        return [
            SendTo(player_id, _error("bad_message", f"unknown type {mtype!r}"))
        ]

    def _handle_command(self, player: Player, msg: dict) -> list[Effect]:
        text = msg.get("text")
        if not isinstance(text, str) or not text.strip():
            return [SendTo(player.player_id, _error("bad_message", "command needs text"))]
        if self.phase != "running":
            return [SendTo(player.player_id, _error("not_running", "battle is not running"))]
        if player.pending_command is not None:
            return [
                AppendLog(self._record(player, text, "rejected", error_code="busy")),
                SendTo(player.player_id, _error("busy", "translation already in flight")),
            ]
        player.typing = False  # the enter key ends typing
        player.pending_command = text
        effects = self._pause_transition(by=player.side)
        effects.append(StartTranslation(player.player_id, text))
        return effects

    # -- translation outcomes ---------------------------------------------

    def handle_translation(
        self,
        player_id: str,
        command_text: str,
        outcome: TranslationResult | TranslationError,
    ) -> list[Effect]:
        player = self.players.get(player_id)
        if player is None or player.pending_command != command_text:
            return []  # stale result (player left); nothing to apply
        player.pending_command = None
        if self.phase != "running":
            # battle ended while translating; keep the audit trail intact
            return [
                AppendLog(
                    self._record(
                        player, command_text, "rejected", error_code="session_ended"
                    )
                )
            ]
        effects: list[Effect] = []
        if isinstance(outcome, TranslationResult):
            self.vms[player.side].apply_branch(outcome.branch)
            branch_json = encode_json(outcome.branch)
            record = self._record(
                player,
                command_text,
                "applied",
                branch_json=branch_json,
                latency_ms=int(outcome.latency_ms),
            )
            effects.append(AppendLog(record))
            effects.append(
                Broadcast(
                    {
                        "type": "branch",
                        "player": player.side,
                        "command": command_text,
                        "branch": _json_obj(branch_json),
                        "latency_ms": int(outcome.latency_ms),
                    }
                )
            )
        else:
            effects.append(
                AppendLog(
                    self._record(
                        player, command_text, "rejected", error_code=outcome.code
                    )
                )
            )
            effects.append(
                SendTo(player.player_id, _error(outcome.code, str(outcome)))
            )
        effects.extend(self._pause_transition(by=player.side))
        return effects

    # -- time ------------------------------------------------------------

    def on_tick(self) -> list[Effect]:
        """One scheduler beat: enforce wall-clock rules, then maybe simulate."""
        if self.phase != "running":
            return []
        assert self.world is not None
        wall_now = self.clock()
        effects: list[Effect] = []

        # typing abuse cap: force-clear typing after pause_cap_s
        if (
            self.world.paused
            and self.pause_started_wall is not None
            and wall_now - self.pause_started_wall >= self.tuning.pause_cap_s
        ):
            for player in self.players.values():
                player.typing = False
            self.pause_started_wall = wall_now
            effects.extend(self._pause_transition(by=None))

        # disconnect forfeit after the grace period
        for player in self.players.values():
            if (
                not player.connected
                and player.disconnected_at is not None
                and wall_now - player.disconnected_at >= self.tuning.forfeit_grace_s
            ):
                winner = "B" if player.side == "A" else "A"
                self.world.outcome = Outcome(winner, "forfeit")
                effects.extend(self._end_effects())
                return effects

        if self.world.paused or self.world.outcome is not None:
            return effects

        intents = {
            side: self.vms[side].step(
                engine.sensors_for(self.world, side), self.config.tick_dt
            )
            for side in ("A", "B")
        }
        engine.tick(self.world, intents["A"], intents["B"])
        if self.world.tick % self.tuning.snapshot_every == 0:
            effects.append(Broadcast(engine.snapshot(self.world)))
        if self.world.outcome is not None:
            effects.extend(self._end_effects())
        return effects

    # -- connection lifecycle ----------------------------------------------

    def on_disconnect(self, player_id: str) -> list[Effect]:
        player = self.players.get(player_id)
        if player is None:
            return []
        player.connected = False
        player.disconnected_at = self.clock()
        player.typing = False
        if self.phase == "lobby":
            self.phase = "ended"
            return [SessionOver("lobby_abandoned")]
        if self.phase == "running" and all(
            not p.connected for p in self.players.values()
        ):
            self.phase = "ended"
            return [SessionOver("all_disconnected")]
        # while running: the grace timer in on_tick decides the forfeit;
        # typing cleared above may resume the game for the remaining player
        if self.phase == "running":
            return self._pause_transition(by=player.side)
        return []

    def on_shutdown(self) -> list[Effect]:
        """Server is going down; tell the players and end cleanly."""
        if self.phase != "running" or self.world is None:
            self.phase = "ended"
            return [SessionOver("shutdown")]
        self.world.outcome = Outcome("draw", "forfeit")
        return self._end_effects()

    # -- internals --------------------------------------------------------

    def _pause_transition(self, by: str | None) -> list[Effect]:
        if self.phase != "running" or self.world is None:
            return []
        cause = next(
            (
                p.side
                for p in sorted(self.players.values(), key=lambda p: p.side)
                if p.typing or p.pending_command is not None
            ),
            None,
        )
        should_pause = cause is not None
        if should_pause and not self.world.paused:
            engine.set_paused(self.world, True)
            self.pause_started_wall = self.clock()
            return [
                Broadcast(
                    {"type": "paused", "by": by or cause, "tick": self.world.tick}
                )
            ]
        if not should_pause and self.world.paused:
            engine.set_paused(self.world, False)
            self.pause_started_wall = None
            return [Broadcast({"type": "resumed", "tick": self.world.tick})]
        return []

    def _end_effects(self) -> list[Effect]:
        assert self.world is not None and self.world.outcome is not None
        self.phase = "ended"
        outcome = self.world.outcome
        return [
            Broadcast(
                {"type": "end", "winner": outcome.winner, "reason": outcome.reason}
            ),
            SessionOver(outcome.reason),
        ]

    def _record(
        self,
        player: Player,
        text: str,
        status: str,
        branch_json: str | None = None,
        latency_ms: int | None = None,
        error_code: str | None = None,
    ) -> CommandLogRecord:
        return CommandLogRecord(
            session_id=self.session_id,
            timestamp_ms=self.now_ms(),
            player_id=player.player_id,
            command_text=text,
            status=status,
            branch_json=branch_json,
            latency_ms=latency_ms,
            error_code=error_code,
        )


def _error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}


def _config_obj(config: BattleConfig) -> dict:
    return dataclasses.asdict(config)


def _json_obj(text: str) -> dict:
    return json.loads(text)
