"""Tick-stepped execution of a behavior branch for one agent.

Each tick the VM emits exactly one Intent for the battle engine to
resolve.  Flow is structured: a condition pushes its chosen arm, an
exhausted arm resumes after the condition, ``repeat`` restarts the whole
circuit, ``end`` (or running off the end) drops back to the default
behavior of standing still.

Two rules keep execution safe against adversarial branches:

* a circuit that reaches ``repeat`` without having started any action
  costs one idle tick, so no branch can spin forever inside one tick;
* a newly applied branch preempts whatever was running, including an
  in-progress action (last command wins, effective next tick).

Attack intents are fire-and-forget: the VM occupies the attack's busy
phase but the engine decides whether the attack actually launches
(cooldowns, stun).  Movement actions complete from what the sensors say,
so a blocked retreat or an arrived move_to hands control to the next node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .branches import (
    ActionNode,
    BehaviorBranch,
    ConditionNode,
    ControlNode,
    node_count,
)
from .predicates import And, BoolVar, Comparison, Not, Or, Predicate


@dataclass(frozen=True)
class SensorSnapshot:
    """Per-side view of the world, evaluated against predicates."""

    distance_to_opponent: float
    self_hp: float
    opponent_hp: float
    self_x: float
    self_z: float
    opponent_x: float
    opponent_z: float
    elapsed_time: float
    opponent_is_attacking: bool


@dataclass(frozen=True)
class Move:
    dx: float
    dz: float


@dataclass(frozen=True)
class StartAttack:
    kind: str


@dataclass(frozen=True)
class ContinueAction:
    pass


@dataclass(frozen=True)
class Idle:
    pass


Intent = Move | StartAttack | ContinueAction | Idle

CONTINUE = ContinueAction()
IDLE = Idle()

_PROGRESS_EPS = 1e-9


@dataclass(frozen=True)
class ActionTimings:
    """Busy durations and movement thresholds the VM needs; the engine
    derives one from its config so the two sides stay in step.
    Defaults match the default battle constants."""

    thunderbolt_busy_s: float = 0.2
    iron_tail_busy_s: float = 0.4
    tackle_busy_s: float = 0.5
    approach_stop_distance: float = 1.5
    retreat_stop_distance: float = 10.0
    arrival_epsilon: float = 0.25

    def busy_seconds(self, attack: str) -> float:
        return {
            "thunderbolt": self.thunderbolt_busy_s,
            "iron_tail": self.iron_tail_busy_s,
            "tackle": self.tackle_busy_s,
        }[attack]


@dataclass
class CurrentAction:
    name: str
    args: tuple[float, ...]
    remaining_ticks: int  # -1 for movement actions (sensor-completed)
    last_distance: float | None = None


@dataclass
class VmState:
    timings: ActionTimings = field(default_factory=ActionTimings)
    active_branch: BehaviorBranch | None = None
    # each frame is [node tuple, next index]; top of stack executes
    frames: list[list] = field(default_factory=list)
    current_action: CurrentAction | None = None
    action_started_this_circuit: bool = False

    def apply_branch(self, branch: BehaviorBranch) -> None:
        """Replace whatever is running; takes effect on the next step."""
        self.active_branch = branch
        self.frames = [[branch.nodes, 0]]
        self.current_action = None
        self.action_started_this_circuit = False

    def step(self, sensors: SensorSnapshot, dt: float) -> Intent:
        if self.current_action is not None:
            intent = self._continue_action(sensors)
            if intent is not None:
                return intent
            self._advance()  # completed action: move past its node
        return self._interpret(sensors, dt)

    # -- running actions ----------------------------------------------

    def _continue_action(self, sensors: SensorSnapshot) -> Intent | None:
        """Intent while the action runs, or None once it has completed."""
        act = self.current_action
        assert act is not None
        if act.remaining_ticks >= 0:
            act.remaining_ticks -= 1
            if act.remaining_ticks <= 0:
                self.current_action = None
                return None
            return IDLE if act.name == "idle" else CONTINUE
        intent = self._movement_intent(act, sensors)
        if intent is None:
            self.current_action = None
        return intent

    def _movement_intent(
        self, act: CurrentAction, sensors: SensorSnapshot
    ) -> Intent | None:
        t = self.timings
        dist = sensors.distance_to_opponent
        if act.name == "approach":
            if dist <= t.approach_stop_distance:
                return None
            return _unit_toward(
                sensors.self_x, sensors.self_z, sensors.opponent_x, sensors.opponent_z
            )
        if act.name == "retreat":
            if dist >= t.retreat_stop_distance:
                return None
            if act.last_distance is not None and dist <= act.last_distance + _PROGRESS_EPS:
                return None  # pinned against the arena edge (or overlapping)
            act.last_distance = dist
            return _unit_toward(
                sensors.opponent_x, sensors.opponent_z, sensors.self_x, sensors.self_z
            )
        if act.name == "move_to":
            tx, tz = act.args
            remaining = math.hypot(tx - sensors.self_x, tz - sensors.self_z)
            if remaining <= t.arrival_epsilon:
                return None
            if act.last_distance is not None and remaining >= act.last_distance - _PROGRESS_EPS:
                return None  # no progress: target unreachable
            act.last_distance = remaining
            return _unit_toward(sensors.self_x, sensors.self_z, tx, tz)
        raise AssertionError(f"not a movement action: {act.name}")

    # -- interpreting nodes --------------------------------------------

    def _interpret(self, sensors: SensorSnapshot, dt: float) -> Intent:
        if self.active_branch is None:
            return IDLE
        guard = 0
        guard_limit = 2 * node_count(self.active_branch)
        while True:
            if not self.frames:
                self._clear()
                return IDLE
            nodes, index = self.frames[-1]
            if index >= len(nodes):
                self.frames.pop()
                if self.frames:
                    self._advance()  # resume after the owning condition
                continue
            node = nodes[index]
            guard += 1
            assert guard <= guard_limit, "iteration guard exceeded"
            if isinstance(node, ActionNode):
                intent = self._start_action(node, sensors, dt)
                if intent is None:
                    self._advance()  # already satisfied, costs no time
                    continue
                self.action_started_this_circuit = True
                return intent
            if isinstance(node, ConditionNode):
                arm = (
                    node.then_nodes
                    if eval_predicate(node.predicate, sensors)
                    else node.else_nodes
                )
                self.frames.append([arm, 0])
                continue
            assert isinstance(node, ControlNode)
            if node.name == "end":
                self._clear()
                return IDLE
            # repeat: restart the circuit, but never run a second
            # action-free circuit inside the same tick
            self.frames = [[self.active_branch.nodes, 0]]
            if self.action_started_this_circuit:
                self.action_started_this_circuit = False
                continue
            return IDLE

    def _start_action(
        self, node: ActionNode, sensors: SensorSnapshot, dt: float
    ) -> Intent | None:
        """Begin the action and return its first intent, or None when the
        action is already satisfied (movement with nothing to do)."""
        name = node.name
        if name in ("thunderbolt", "iron_tail", "tackle"):
            ticks = max(1, round(self.timings.busy_seconds(name) / dt))
            self.current_action = CurrentAction(name, node.args, ticks)
            return StartAttack(name)
        if name == "idle":
            ticks = max(1, round(node.args[0] / dt))
            self.current_action = CurrentAction(name, node.args, ticks)
            return IDLE
        act = CurrentAction(name, node.args, -1)
        intent = self._movement_intent(act, sensors)
        if intent is None:
            return None
        self.current_action = act
        return intent

    def _advance(self) -> None:
        if self.frames:
            self.frames[-1][1] += 1

    def _clear(self) -> None:
        self.active_branch = None
        self.frames = []
        self.current_action = None
        self.action_started_this_circuit = False


def _unit_toward(from_x: float, from_z: float, to_x: float, to_z: float) -> Intent:
    dx, dz = to_x - from_x, to_z - from_z
    norm = math.hypot(dx, dz)
    if norm == 0.0:
        return IDLE  # no direction applies
    return Move(dx / norm, dz / norm)


def eval_predicate(ast: Predicate, sensors: SensorSnapshot) -> bool:
    """Total, pure evaluation; boolean sensors compare as 1/0."""
    if isinstance(ast, Comparison):
        lhs = _operand_value(ast.lhs, sensors)
        rhs = _operand_value(ast.rhs, sensors)
        if ast.op == "<":
            return lhs < rhs
        if ast.op == "<=":
            return lhs <= rhs
        if ast.op == ">":
            return lhs > rhs
        if ast.op == ">=":
            return lhs >= rhs
        if ast.op == "==":
            return lhs == rhs
        if ast.op == "!=":
            return lhs != rhs
        raise AssertionError(f"unknown operator {ast.op}")
    if isinstance(ast, BoolVar):
        return _operand_value(ast.name, sensors) != 0.0
    if isinstance(ast, Not):
        return not eval_predicate(ast.item, sensors)
    if isinstance(ast, And):
        return all(eval_predicate(item, sensors) for item in ast.items)
    if isinstance(ast, Or):
        return any(eval_predicate(item, sensors) for item in ast.items)
    raise TypeError(f"not a predicate node: {ast!r}")


def _operand_value(operand: str | float, sensors: SensorSnapshot) -> float:
    if isinstance(operand, str):
        return float(getattr(sensors, operand))
    return operand
