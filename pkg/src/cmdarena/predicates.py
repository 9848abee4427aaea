"""Boolean predicate language evaluated against per-agent sensor readings.

Predicates appear as quoted strings inside condition nodes, e.g.
``"distance_to_opponent < 6 and not opponent_is_attacking == 1"``.
The grammar is comparisons over sensor variables and numeric literals,
combined with ``and`` / ``or`` / ``not``.  Precedence, loosest first:
``or``, ``and``, ``not``; comparisons do not chain.

A bare variable is only legal for boolean sensors and means ``!= 0``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

# Closed set of sensor variables; anything else is a validation error.
SENSOR_VARIABLES = frozenset(
    {
        "distance_to_opponent",
        "self_hp",
        "opponent_hp",
        "self_x",
        "self_z",
        "opponent_x",
        "opponent_z",
        "elapsed_time",
        "opponent_is_attacking",
    }
)

# Sensors that may stand alone as a truth value (compared as 1/0).
BOOLEAN_SENSORS = frozenset({"opponent_is_attacking"})

COMPARISON_OPS = ("<=", ">=", "==", "!=", "<", ">")

MAX_PREDICATE_DEPTH = 6


@dataclass(frozen=True)
class Comparison:
    """``lhs op rhs`` where each operand is a variable name (str) or literal (float)."""

    lhs: str | float
    op: str
    rhs: str | float


@dataclass(frozen=True)
class BoolVar:
    """A boolean sensor used bare; truthy when its value is nonzero."""

    name: str


@dataclass(frozen=True)
class Not:
    item: "Predicate"


@dataclass(frozen=True)
class And:
    """n-ary conjunction; nested Ands flatten so the form is canonical."""

    items: tuple["Predicate", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", _flatten(self.items, And))


@dataclass(frozen=True)
class Or:
    """n-ary disjunction; nested Ors flatten so the form is canonical."""

    items: tuple["Predicate", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", _flatten(self.items, Or))


def _flatten(items: tuple, kind: type) -> tuple:
    flat: list = []
    for item in items:
        if isinstance(item, kind):
            flat.extend(item.items)
        else:
            flat.append(item)
    return tuple(flat)


Predicate = Comparison | BoolVar | Not | And | Or


class PredicateSyntaxError(ValueError):
    """Raised when predicate text does not conform to the grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>[+-]?\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|!=|<|>)|(?P<lparen>\()|(?P<rparen>\)))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise PredicateSyntaxError(
                f"unexpected character {stripped[0]!r}", len(text) - len(stripped)
            )
        for kind in ("num", "ident", "op", "lparen", "rparen"):
            value = m.group(kind)
            if value is not None:
                tokens.append((kind, value, m.start(kind)))
                break
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse_or(self) -> Predicate:
        items = [self.parse_and()]
        while self.peek()[:2] == ("ident", "or"):
            self.advance()
            items.append(self.parse_and())
        if len(items) == 1:
            return items[0]
        return Or(tuple(items))

    def parse_and(self) -> Predicate:
        items = [self.parse_cmp()]
        while self.peek()[:2] == ("ident", "and"):
            self.advance()
            items.append(self.parse_cmp())
        if len(items) == 1:
            return items[0]
        return And(tuple(items))

    def parse_cmp(self) -> Predicate:
        kind, value, pos = self.peek()
        if kind == "ident" and value == "not":
            self.advance()
            return Not(self.parse_cmp())
        if kind == "lparen":
            self.advance()
            inner = self.parse_or()
            kind, value, pos = self.advance()
            if kind != "rparen":
                raise PredicateSyntaxError("expected ')'", pos)
            return inner
        # operand [op operand]
        lhs = self._parse_operand()
        kind, value, pos = self.peek()
        if kind == "op":
            self.advance()
            rhs = self._parse_operand()
            return Comparison(lhs, value, rhs)
        if isinstance(lhs, str):
            return BoolVar(lhs)
        raise PredicateSyntaxError("bare literal is not a predicate", pos)

    def _parse_operand(self) -> str | float:
        kind, value, pos = self.advance()
        if kind == "num":
            return float(value)
        if kind == "ident":
            if value in ("and", "or", "not"):
                raise PredicateSyntaxError(f"unexpected keyword {value!r}", pos)
            return value
        raise PredicateSyntaxError(f"expected variable or number, got {value!r}", pos)


def parse_predicate(text: str) -> Predicate:
    """Parse predicate text into an AST.  Raises PredicateSyntaxError.

    Unknown variable names parse fine; they are caught by validation so the
    error can carry the node path.
    """
    parser = _Parser(_tokenize(text))
    ast = parser.parse_or()
    kind, value, pos = parser.peek()
    if kind != "end":
        raise PredicateSyntaxError(f"trailing input {value!r}", pos)
    return ast


def format_number(x: float) -> str:
    """Canonical numeric literal: integers without a trailing .0."""
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_operand(operand: str | float) -> str:
    if isinstance(operand, str):
        return operand
    return format_number(operand)


def print_predicate(ast: Predicate) -> str:
    """Canonical text: minimal parentheses, single spaces between tokens."""
    return _print(ast, parent="or")


def _print(ast: Predicate, parent: str) -> str:
    # parent is the binding context: "or" (loosest), "and", "cmp" (tightest)
    if isinstance(ast, Comparison):
        return f"{_fmt_operand(ast.lhs)} {ast.op} {_fmt_operand(ast.rhs)}"
    if isinstance(ast, BoolVar):
        return ast.name
    if isinstance(ast, Not):
        return f"not {_print(ast.item, 'cmp')}"
    if isinstance(ast, And):
        text = " and ".join(_print(item, "and") for item in ast.items)
        return f"({text})" if parent == "cmp" else text
    if isinstance(ast, Or):
        text = " or ".join(_print(item, "and") for item in ast.items)
        return f"({text})" if parent in ("and", "cmp") else text
    raise TypeError(f"not a predicate node: {ast!r}")


def predicate_depth(ast: Predicate) -> int:
    if isinstance(ast, (Comparison, BoolVar)):
        return 1
    if isinstance(ast, Not):
        return 1 + predicate_depth(ast.item)
    if isinstance(ast, (And, Or)):
        return 1 + max(predicate_depth(item) for item in ast.items)
    raise TypeError(f"not a predicate node: {ast!r}")


def predicate_violations(ast: Predicate) -> list[str]:
    """Rule violations for a parsed predicate (empty list when clean)."""
    problems: list[str] = []

    def walk(node: Predicate) -> None:
        if isinstance(node, Comparison):
            for operand in (node.lhs, node.rhs):
                if isinstance(operand, str) and operand not in SENSOR_VARIABLES:
                    problems.append(f"unknown sensor variable '{operand}'")
                if isinstance(operand, float) and not math.isfinite(operand):
                    problems.append("non-finite literal")
        elif isinstance(node, BoolVar):
            if node.name not in SENSOR_VARIABLES:
                problems.append(f"unknown sensor variable '{node.name}'")
            elif node.name not in BOOLEAN_SENSORS:
                problems.append(
                    f"sensor '{node.name}' is not boolean and cannot stand alone"
                )
        elif isinstance(node, Not):
            walk(node.item)
        elif isinstance(node, (And, Or)):
            for item in node.items:
                walk(item)

    walk(ast)
    depth = predicate_depth(ast)
    if depth > MAX_PREDICATE_DEPTH:
        problems.append(f"predicate depth {depth} > {MAX_PREDICATE_DEPTH}")
    return problems
