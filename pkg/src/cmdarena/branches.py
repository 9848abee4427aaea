"""Behavior-branch tree model, structural validation, and the JSON codec.

A branch is an ordered tree of three node kinds:

* action nodes name one executable agent action with numeric arguments,
* condition nodes pick a then/else arm from a sensor predicate,
* control nodes steer flow (``repeat`` restarts the circuit, ``end`` stops).

Values are immutable; equality is structural.  The JSON shape is the wire
and log format, so encoding is deterministic (fixed key order, compact
separators) and byte-identical across runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .predicates import (
    Predicate,
    PredicateSyntaxError,
    parse_predicate,
    predicate_violations,
    print_predicate,
)

ACTION_NAMES = frozenset(
    {"thunderbolt", "iron_tail", "tackle", "approach", "retreat", "move_to", "idle"}
)
ATTACK_ACTIONS = ("thunderbolt", "iron_tail", "tackle")
CONTROL_NAMES = frozenset({"repeat", "end"})

# arity by action name; absent means zero arguments
ACTION_ARITY = {"move_to": 2, "idle": 1}

MAX_NODE_COUNT = 64
MAX_NESTING_DEPTH = 8


@dataclass(frozen=True)
class ActionNode:
    name: str
    args: tuple[float, ...] = ()


@dataclass(frozen=True)
class ConditionNode:
    predicate: Predicate
    then_nodes: tuple["Node", ...] = ()
    else_nodes: tuple["Node", ...] = ()


@dataclass(frozen=True)
class ControlNode:
    name: str


Node = ActionNode | ConditionNode | ControlNode


@dataclass(frozen=True)
class BehaviorBranch:
    nodes: tuple[Node, ...]


def action(name: str, *args: float) -> ActionNode:
    return ActionNode(name, tuple(float(a) for a in args))


def condition(
    predicate: Predicate | str,
    then_nodes: tuple[Node, ...] | list[Node] = (),
    else_nodes: tuple[Node, ...] | list[Node] = (),
) -> ConditionNode:
    if isinstance(predicate, str):
        predicate = parse_predicate(predicate)
    return ConditionNode(predicate, tuple(then_nodes), tuple(else_nodes))


def control(name: str) -> ControlNode:
    return ControlNode(name)


def branch(nodes: list[Node] | tuple[Node, ...]) -> BehaviorBranch:
    return BehaviorBranch(tuple(nodes))


def node_count(b: BehaviorBranch) -> int:
    def count(nodes: tuple[Node, ...]) -> int:
        total = 0
        for node in nodes:
            total += 1
            if isinstance(node, ConditionNode):
                total += count(node.then_nodes) + count(node.else_nodes)
        return total

    return count(b.nodes)


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str

    def __str__(self) -> str:
        return f"{self.path}: {self.rule}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


class BranchValidationError(ValueError):
    """A branch failed validation; carries the full report."""

    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(str(v) for v in report.violations) or "invalid branch")
        self.report = report


def validate(b: BehaviorBranch) -> ValidationReport:
    """Check every branch invariant; pure, never raises."""
    violations: list[Violation] = []

    if not b.nodes:
        violations.append(Violation("nodes", "branch has no nodes"))

    total = node_count(b)
    if total > MAX_NODE_COUNT:
        violations.append(
            Violation("nodes", f"node count {total} > {MAX_NODE_COUNT}")
        )

    max_depth = 0

    def walk(nodes: tuple[Node, ...], prefix: str, depth: int) -> None:
        nonlocal max_depth
        if nodes:
            max_depth = max(max_depth, depth)
        for i, node in enumerate(nodes):
            path = f"{prefix}[{i}]"
            if isinstance(node, ActionNode):
                _check_action(node, path, violations)
            elif isinstance(node, ControlNode):
                if node.name not in CONTROL_NAMES:
                    violations.append(
                        Violation(path, f"unknown control '{node.name}'")
                    )
            elif isinstance(node, ConditionNode):
                for rule in predicate_violations(node.predicate):
                    violations.append(Violation(path, rule))
                walk(node.then_nodes, f"{path}.then", depth + 1)
                walk(node.else_nodes, f"{path}.else", depth + 1)
            else:
                violations.append(Violation(path, f"unknown node type {type(node).__name__}"))

    walk(b.nodes, "nodes", 1)
    if max_depth > MAX_NESTING_DEPTH:
        violations.append(
            Violation("nodes", f"depth {max_depth} > {MAX_NESTING_DEPTH}")
        )
    return ValidationReport(tuple(violations))


def _check_action(node: ActionNode, path: str, violations: list[Violation]) -> None:
    if node.name not in ACTION_NAMES:
        violations.append(Violation(path, f"unknown action '{node.name}'"))
        return
    arity = ACTION_ARITY.get(node.name, 0)
    if len(node.args) != arity:
        violations.append(
            Violation(path, f"{node.name} arity {arity}, got {len(node.args)}")
        )
        return
    for j, arg in enumerate(node.args):
        if not math.isfinite(arg):
            violations.append(Violation(path, f"argument {j} is not finite"))
    if node.name == "idle" and node.args and node.args[0] <= 0:
        violations.append(Violation(path, "idle duration must be > 0"))


def validate_or_raise(b: BehaviorBranch) -> BehaviorBranch:
    report = validate(b)
    if not report.ok:
        raise BranchValidationError(report)
    return b


# --- JSON codec ----------------------------------------------------------

class BranchDecodeError(ValueError):
    """JSON did not match the branch schema; message carries the schema path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def encode_json(b: BehaviorBranch) -> str:
    """Deterministic compact encoding; stable field order."""
    return json.dumps(_branch_to_obj(b), separators=(",", ":"), ensure_ascii=False)


def _branch_to_obj(b: BehaviorBranch) -> dict:
    return {"nodes": [_node_to_obj(n) for n in b.nodes]}


def _node_to_obj(node: Node) -> dict:
    if isinstance(node, ActionNode):
        # args always present, possibly []
        return {"kind": "action", "name": node.name, "args": list(node.args)}
    if isinstance(node, ConditionNode):
        return {
            "kind": "condition",
            "pred": print_predicate(node.predicate),
            "then": [_node_to_obj(n) for n in node.then_nodes],
            "else": [_node_to_obj(n) for n in node.else_nodes],
        }
    if isinstance(node, ControlNode):
        return {"kind": "control", "name": node.name}
    raise TypeError(f"not a node: {node!r}")


def decode_json(text: str) -> BehaviorBranch:
    """Decode and validate; raises BranchDecodeError / BranchValidationError."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BranchDecodeError("$", f"invalid JSON: {exc.msg}") from exc
    b = decode_obj(obj)
    report = validate(b)
    if not report.ok:
        raise BranchValidationError(report)
    return b


def decode_obj(obj: object) -> BehaviorBranch:
    """Structural decode of an already-parsed JSON object (no validation)."""
    if not isinstance(obj, dict):
        raise BranchDecodeError("$", "branch must be an object")
    if "nodes" not in obj:
        raise BranchDecodeError("$", "missing field 'nodes'")
    nodes = obj["nodes"]
    if not isinstance(nodes, list):
        raise BranchDecodeError("$.nodes", "'nodes' must be a list")
    return BehaviorBranch(
        tuple(_node_from_obj(n, f"$.nodes[{i}]") for i, n in enumerate(nodes))
    )


def _node_from_obj(obj: object, path: str) -> Node:
    if not isinstance(obj, dict):
        raise BranchDecodeError(path, "node must be an object")
    kind = obj.get("kind")
    if kind == "action":
        name = _require_str(obj, "name", path)
        if "args" not in obj:
            raise BranchDecodeError(path, "missing field 'args'")
        args = obj["args"]
        if not isinstance(args, list) or not all(
            isinstance(a, (int, float)) and not isinstance(a, bool) for a in args
        ):
            raise BranchDecodeError(f"{path}.args", "'args' must be a list of numbers")
        return ActionNode(name, tuple(float(a) for a in args))
    if kind == "condition":
        pred_text = _require_str(obj, "pred", path)
        try:
            pred = parse_predicate(pred_text)
        except PredicateSyntaxError as exc:
            raise BranchDecodeError(f"{path}.pred", str(exc)) from exc
        then_nodes = _node_list(obj, "then", path)
        else_nodes = _node_list(obj, "else", path)
        return ConditionNode(pred, then_nodes, else_nodes)
    if kind == "control":
        return ControlNode(_require_str(obj, "name", path))
    if kind is None:
        raise BranchDecodeError(path, "missing field 'kind'")
    raise BranchDecodeError(path, f"unknown kind {kind!r}")


def _require_str(obj: dict, key: str, path: str) -> str:
    if key not in obj:
        raise BranchDecodeError(path, f"missing field '{key}'")
    value = obj[key]
    if not isinstance(value, str):
        raise BranchDecodeError(f"{path}.{key}", f"'{key}' must be a string")
    return value


def _node_list(obj: dict, key: str, path: str) -> tuple[Node, ...]:
    if key not in obj:
        raise BranchDecodeError(path, f"missing field '{key}'")
    value = obj[key]
    if not isinstance(value, list):
        raise BranchDecodeError(f"{path}.{key}", f"'{key}' must be a list")
    return tuple(
        _node_from_obj(n, f"{path}.{key}[{i}]") for i, n in enumerate(value)
    )
