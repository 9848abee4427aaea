"""Headless deterministic battle replays for testing and balancing.

A replay script schedules commands (translated by the keyword mock) or
inline fixture branches for either side at given ticks, then runs the
battle with no network and no wall clock.  The transcript has one JSON
line per tick with a full state hash, so two runs — or two platforms —
can be compared byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import engine
from .branches import BehaviorBranch, decode_obj, validate_or_raise
from .engine import BattleConfig, WorldState
from .translator import mock_translate
from .vm import VmState


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class ScriptedCommand:
    tick: int  # applied once world.tick reaches this value; in effect next tick
    side: str
    command: str | None = None  # translated via the keyword mock
    branch: BehaviorBranch | None = None  # or a fixture branch, verbatim


@dataclass(frozen=True)
class ReplayScript:
    seed: int
    commands: tuple[ScriptedCommand, ...]

    @classmethod
    def from_json(cls, text: str) -> "ReplayScript":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"script is not valid JSON: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ScriptError("script must be a JSON object")
        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            raise ScriptError("seed must be an integer")
        raw_commands = data.get("commands", [])
        if not isinstance(raw_commands, list):
            raise ScriptError("commands must be a list")
        commands = []
        last_tick = 0
        for i, entry in enumerate(raw_commands):
            where = f"commands[{i}]"
            if not isinstance(entry, dict):
                raise ScriptError(f"{where}: must be an object")
            tick = entry.get("tick")
            if not isinstance(tick, int) or tick < 0:
                raise ScriptError(f"{where}: tick must be a non-negative integer")
            if tick < last_tick:
                raise ScriptError(f"{where}: ticks must be non-decreasing")
            last_tick = tick
            side = entry.get("side")
            if side not in ("A", "B"):
                raise ScriptError(f"{where}: side must be 'A' or 'B'")
            command = entry.get("command")
            branch_obj = entry.get("branch")
            if (command is None) == (branch_obj is None):
                raise ScriptError(f"{where}: exactly one of command/branch required")
            branch = None
            if branch_obj is not None:
                try:
                    branch = validate_or_raise(decode_obj(branch_obj))
                except ValueError as exc:
                    raise ScriptError(f"{where}: bad branch: {exc}") from exc
            elif not isinstance(command, str):
                raise ScriptError(f"{where}: command must be a string")
            commands.append(ScriptedCommand(tick, side, command, branch))
        return cls(seed, tuple(commands))


@dataclass
class ReplayResult:
    world: WorldState
    transcript: list[str]  # one JSON line per tick

    @property
    def outcome(self) -> engine.Outcome:
        assert self.world.outcome is not None
        return self.world.outcome


def run_replay(script: ReplayScript, config: BattleConfig) -> ReplayResult:
    world = engine.new_battle(config, script.seed)
    timings = config.timings()
    vms = {"A": VmState(timings), "B": VmState(timings)}
    transcript: list[str] = []
    queue = list(script.commands)

    while world.outcome is None:
        while queue and queue[0].tick <= world.tick:
            entry = queue.pop(0)
            branch = entry.branch
            if branch is None:
                assert entry.command is not None
                branch = mock_translate(entry.command)
            vms[entry.side].apply_branch(branch)
        intents = {
            side: vms[side].step(engine.sensors_for(world, side), config.tick_dt)
            for side in ("A", "B")
        }
        events = engine.tick(world, intents["A"], intents["B"])
        transcript.append(
            json.dumps(
                {"tick": world.tick, "hash": engine.state_hash(world), "events": events},
                separators=(",", ":"),
            )
        )
    return ReplayResult(world, transcript)
