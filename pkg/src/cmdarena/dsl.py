"""Surface DSL for behavior branches: parser, streaming parser, printer.

Programs are a single ``branch([...])`` call in a strict subset of Python
call syntax, which code-generation models emit readily::

    branch([condition("distance_to_opponent < 6", [action("retreat")],
            [action("thunderbolt")]), control("repeat")])

Anything after the ``)`` that closes the ``branch(`` call is ignored, so
model output may trail off into prose.  The streaming parser consumes a
byte stream and reports completion the moment that closing ``)`` is seen,
never looking past it; this is what lets a translation cancel the model
stream early.

The lexer works on raw bytes: every structural character is ASCII, and
multi-byte UTF-8 sequences can only appear inside quoted strings, where
they are buffered until the closing quote.  Chunk boundaries may therefore
split tokens or code points arbitrarily.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .branches import (
    MAX_NESTING_DEPTH,
    MAX_NODE_COUNT,
    ActionNode,
    BehaviorBranch,
    BranchValidationError,
    ConditionNode,
    ControlNode,
    Node,
    validate,
)
from .predicates import (
    PredicateSyntaxError,
    format_number,
    parse_predicate,
    print_predicate,
)

# Allocation bounds for hostile/degenerate model output.
MAX_STRING_BYTES = 4096
MAX_NUMBER_BYTES = 64


class DslSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        detail = f"{message} at line {line}, column {col}"
        if expected:
            detail += f" (expected {' | '.join(expected)})"
        super().__init__(detail)
        self.line = line
        self.col = col
        self.expected = expected


class StreamStatus(enum.Enum):
    INCOMPLETE = "incomplete"
    COMPLETE = "complete"
    FAILED = "failed"


_IDENT_START = frozenset(b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | frozenset(b"0123456789")
_NUMBER_START = frozenset(b"0123456789+-")
_NUMBER_CONT = frozenset(b"0123456789.")
_WHITESPACE = frozenset(b" \t\r\n")
_NUMBER_RE = re.compile(rb"[+-]?[0-9]+(\.[0-9]+)?\Z")

_PUNCT = {
    ord("("): "lparen",
    ord(")"): "rparen",
    ord("["): "lbracket",
    ord("]"): "rbracket",
    ord(","): "comma",
}


class _State(enum.Enum):
    BRANCH_IDENT = enum.auto()
    TOP_LPAREN = enum.auto()
    LIST_OPEN = enum.auto()
    NODE_OR_CLOSE = enum.auto()
    NODE_LPAREN = enum.auto()
    ACTION_NAME = enum.auto()
    ACTION_SEP = enum.auto()
    ACTION_ARG = enum.auto()
    PRED_STRING = enum.auto()
    COND_COMMA_THEN = enum.auto()
    COND_COMMA_ELSE = enum.auto()
    NODE_RPAREN = enum.auto()
    CONTROL_NAME = enum.auto()
    LIST_SEP = enum.auto()
    TOP_RPAREN = enum.auto()
    DONE = enum.auto()


_EXPECTED = {
    _State.BRANCH_IDENT: ("'branch'",),
    _State.TOP_LPAREN: ("'('",),
    _State.LIST_OPEN: ("'['",),
    _State.NODE_OR_CLOSE: ("'action'", "'condition'", "'control'", "']'"),
    _State.NODE_LPAREN: ("'('",),
    _State.ACTION_NAME: ("string",),
    _State.ACTION_SEP: ("','", "')'"),
    _State.ACTION_ARG: ("number",),
    _State.PRED_STRING: ("string",),
    _State.COND_COMMA_THEN: ("','",),
    _State.COND_COMMA_ELSE: ("','",),
    _State.NODE_RPAREN: ("')'",),
    _State.CONTROL_NAME: ("string",),
    _State.LIST_SEP: ("','", "']'"),
    _State.TOP_RPAREN: ("')'",),
    _State.DONE: (),
}


@dataclass
class _ListFrame:
    nodes: list[Node] = field(default_factory=list)


@dataclass
class _CondFrame:
    predicate: object
    then_nodes: tuple[Node, ...] | None = None
    else_nodes: tuple[Node, ...] | None = None


@dataclass
class _ControlFrame:
    name: str


@dataclass
class _ActionFrame:
    name: str
    args: list[float] = field(default_factory=list)


class StreamParser:
    """Incremental parser over a byte stream of one DSL program.

    Feed chunks as they arrive; the status flips to COMPLETE exactly when
    the ``)`` closing the top-level ``branch(`` has been consumed (bytes
    past it are never read), or to FAILED on input that cannot extend to a
    valid program.  Both outcomes are final: further feeds are no-ops.
    """

    def __init__(self) -> None:
        self.status = StreamStatus.INCOMPLETE
        self.branch: BehaviorBranch | None = None
        self.error: Exception | None = None
        self.consumed_bytes = 0
        # lexer
        self._offset = 0
        self._line = 1
        self._col = 1
        self._mode = "ws"  # ws | ident | number | string | string_escape
        self._token = bytearray()
        self._token_line = 1
        self._token_col = 1
        # parser
        self._state = _State.BRANCH_IDENT
        self._frames: list[object] = []
        self._node_kind: str | None = None  # pending action|condition|control
        self._root: tuple[Node, ...] | None = None
        self._nodes_built = 0

    # -- public API --------------------------------------------------

    def feed(self, chunk: bytes | str) -> StreamStatus:
        if self.status is not StreamStatus.INCOMPLETE:
            return self.status
        data = chunk.encode("utf-8") if isinstance(chunk, str) else chunk
        for byte in data:
            self._byte(byte)
            if self.status is not StreamStatus.INCOMPLETE:
                break
        return self.status

    def finish(self) -> StreamStatus:
        """Signal end of stream; an unfinished program becomes FAILED."""
        if self.status is not StreamStatus.INCOMPLETE:
            return self.status
        if self._mode in ("ident", "number"):
            self._flush_token()
        if self.status is StreamStatus.INCOMPLETE:
            self._fail(
                DslSyntaxError(
                    "unexpected end of input",
                    self._line,
                    self._col,
                    self._expected(),
                )
            )
        return self.status

    # -- lexer -------------------------------------------------------

    def _byte(self, byte: int) -> None:
        mode = self._mode
        if mode == "string":
            self._string_byte(byte)
            self._advance_pos(byte)
            return
        if mode == "string_escape":
            if byte in (ord('"'), ord("\\")):
                self._token.append(byte)
                self._mode = "string"
            else:
                self._fail_at(f"unsupported escape '\\{chr(byte)}'")
            self._advance_pos(byte)
            return
        if mode == "ident":
            if byte in _IDENT_CONT:
                self._token.append(byte)
                self._advance_pos(byte)
                self._check_token_len()
                return
            self._flush_token()
            if self.status is not StreamStatus.INCOMPLETE:
                return
        elif mode == "number":
            if byte in _NUMBER_CONT:
                self._token.append(byte)
                self._advance_pos(byte)
                self._check_token_len()
                return
            self._flush_token()
            if self.status is not StreamStatus.INCOMPLETE:
                return
        # between tokens
        if byte in _WHITESPACE:
            self._advance_pos(byte)
            return
        if byte in _PUNCT:
            self._emit(_PUNCT[byte], "", self._line, self._col)
            self._advance_pos(byte)
            return
        if byte == ord('"'):
            self._mode = "string"
            self._token = bytearray()
            self._token_line, self._token_col = self._line, self._col
            self._advance_pos(byte)
            return
        if byte in _IDENT_START:
            self._mode = "ident"
            self._token = bytearray([byte])
            self._token_line, self._token_col = self._line, self._col
            self._advance_pos(byte)
            return
        if byte in _NUMBER_START:
            self._mode = "number"
            self._token = bytearray([byte])
            self._token_line, self._token_col = self._line, self._col
            self._advance_pos(byte)
            return
        self._fail_at(f"unexpected character {chr(byte)!r}")
        self._advance_pos(byte)

    def _string_byte(self, byte: int) -> None:
        if byte == ord("\\"):
            self._mode = "string_escape"
            return
        if byte == ord('"'):
            try:
                text = bytes(self._token).decode("utf-8")
            except UnicodeDecodeError:
                self._fail_at("invalid UTF-8 in string")
                return
            self._mode = "ws"
            self._emit("string", text, self._token_line, self._token_col)
            return
        self._token.append(byte)
        self._check_token_len()

    def _check_token_len(self) -> None:
        limit = MAX_STRING_BYTES if self._mode in ("string", "string_escape") else MAX_NUMBER_BYTES
        if len(self._token) > limit:
            self._fail_at("token too long")

    def _flush_token(self) -> None:
        mode, raw = self._mode, bytes(self._token)
        self._mode = "ws"
        if mode == "ident":
            self._emit("ident", raw.decode("ascii"), self._token_line, self._token_col)
        elif mode == "number":
            if not _NUMBER_RE.match(raw):
                self._fail(
                    DslSyntaxError(
                        f"malformed number {raw.decode('ascii', 'replace')!r}",
                        self._token_line,
                        self._token_col,
                    )
                )
                return
            self._emit("number", raw.decode("ascii"), self._token_line, self._token_col)

    def _advance_pos(self, byte: int) -> None:
        self._offset += 1
        if byte == ord("\n"):
            self._line += 1
            self._col = 1
        else:
            self._col += 1

    # -- parser ------------------------------------------------------

    def _emit(self, kind: str, value: str, line: int, col: int) -> None:
        if self.status is not StreamStatus.INCOMPLETE:
            return
        state = self._state
        if state is _State.BRANCH_IDENT:
            if kind == "ident" and value == "branch":
                self._state = _State.TOP_LPAREN
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.TOP_LPAREN:
            if kind == "lparen":
                self._state = _State.LIST_OPEN
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.LIST_OPEN:
            if kind == "lbracket":
                if len([f for f in self._frames if isinstance(f, _ListFrame)]) >= MAX_NESTING_DEPTH:
                    self._fail(
                        DslSyntaxError(
                            f"nesting depth exceeds {MAX_NESTING_DEPTH}", line, col
                        )
                    )
                    return
                self._frames.append(_ListFrame())
                self._state = _State.NODE_OR_CLOSE
            else:
                self._unexpected(kind, value, line, col)
        elif state in (_State.NODE_OR_CLOSE,):
            if kind == "ident" and value in ("action", "condition", "control"):
                self._node_kind = value
                self._state = _State.NODE_LPAREN
            elif kind == "rbracket":
                self._close_list(line, col)
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.NODE_LPAREN:
            if kind == "lparen":
                self._state = {
                    "action": _State.ACTION_NAME,
                    "condition": _State.PRED_STRING,
                    "control": _State.CONTROL_NAME,
                }[self._node_kind or "action"]
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.ACTION_NAME:
            if kind == "string":
                self._frames.append(_ActionFrame(value))
                self._state = _State.ACTION_SEP
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.ACTION_SEP:
            if kind == "comma":
                self._state = _State.ACTION_ARG
            elif kind == "rparen":
                frame = self._frames.pop()
                assert isinstance(frame, _ActionFrame)
                self._finish_node(ActionNode(frame.name, tuple(frame.args)), line, col)
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.ACTION_ARG:
            if kind == "number":
                frame = self._frames[-1]
                assert isinstance(frame, _ActionFrame)
                frame.args.append(float(value))
                self._state = _State.ACTION_SEP
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.PRED_STRING:
            if kind == "string":
                try:
                    pred = parse_predicate(value)
                except PredicateSyntaxError as exc:
                    self._fail(DslSyntaxError(f"bad predicate: {exc}", line, col))
                    return
                self._frames.append(_CondFrame(pred))
                self._state = _State.COND_COMMA_THEN
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.COND_COMMA_THEN or state is _State.COND_COMMA_ELSE:
            if kind == "comma":
                self._state = _State.LIST_OPEN
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.NODE_RPAREN:
            if kind == "rparen":
                frame = self._frames.pop()
                if isinstance(frame, _ControlFrame):
                    self._finish_node(ControlNode(frame.name), line, col)
                elif isinstance(frame, _CondFrame):
                    assert frame.then_nodes is not None and frame.else_nodes is not None
                    self._finish_node(
                        ConditionNode(frame.predicate, frame.then_nodes, frame.else_nodes),
                        line,
                        col,
                    )
                else:  # pragma: no cover - grammar admits no other frame here
                    raise AssertionError(f"unexpected frame {frame!r}")
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.CONTROL_NAME:
            if kind == "string":
                self._frames.append(_ControlFrame(value))
                self._state = _State.NODE_RPAREN
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.LIST_SEP:
            if kind == "comma":
                self._state = _State.NODE_OR_CLOSE
            elif kind == "rbracket":
                self._close_list(line, col)
            else:
                self._unexpected(kind, value, line, col)
        elif state is _State.TOP_RPAREN:
            if kind == "rparen":
                self._complete()
            else:
                self._unexpected(kind, value, line, col)
        else:  # pragma: no cover - DONE never receives tokens
            raise AssertionError(f"token in terminal state {state}")

    def _close_list(self, line: int, col: int) -> None:
        frame = self._frames.pop()
        assert isinstance(frame, _ListFrame)
        nodes = tuple(frame.nodes)
        if not self._frames:
            self._root = nodes
            self._state = _State.TOP_RPAREN
            return
        parent = self._frames[-1]
        if isinstance(parent, _CondFrame):
            if parent.then_nodes is None:
                parent.then_nodes = nodes
                self._state = _State.COND_COMMA_ELSE
            else:
                parent.else_nodes = nodes
                self._state = _State.NODE_RPAREN
        else:  # pragma: no cover - grammar admits no other parent
            raise AssertionError("list closed under non-condition frame")

    def _finish_node(self, node: Node, line: int, col: int) -> None:
        self._nodes_built += 1
        if self._nodes_built > MAX_NODE_COUNT:
            self._fail(
                DslSyntaxError(f"node count exceeds {MAX_NODE_COUNT}", line, col)
            )
            return
        target = self._frames[-1]
        assert isinstance(target, _ListFrame)
        target.nodes.append(node)
        self._state = _State.LIST_SEP

    def _complete(self) -> None:
        assert self._root is not None
        result = BehaviorBranch(self._root)
        report = validate(result)
        self.consumed_bytes = self._offset + 1  # one past the closing ')'
        if report.ok:
            self.branch = result
            self.status = StreamStatus.COMPLETE
        else:
            self.error = BranchValidationError(report)
            self.status = StreamStatus.FAILED
        self._state = _State.DONE

    _PUNCT_NAMES = {
        "lparen": "(",
        "rparen": ")",
        "lbracket": "[",
        "rbracket": "]",
        "comma": ",",
    }

    def _unexpected(self, kind: str, value: str, line: int, col: int) -> None:
        if kind == "string":
            shown = f'"{value}"'
        else:
            shown = self._PUNCT_NAMES.get(kind, value)
        self._fail(
            DslSyntaxError(f"unexpected {shown!r}", line, col, self._expected())
        )

    def _expected(self) -> tuple[str, ...]:
        return _EXPECTED[self._state]

    def _fail(self, error: Exception) -> None:
        self.error = error
        self.status = StreamStatus.FAILED

    def _fail_at(self, message: str) -> None:
        self._fail(DslSyntaxError(message, self._line, self._col))


def parse(text: str | bytes) -> BehaviorBranch:
    """Parse one program; raises DslSyntaxError or BranchValidationError.

    Trailing text after the ``branch(...)`` call is ignored.
    """
    sp = StreamParser()
    sp.feed(text if isinstance(text, bytes) else text.encode("utf-8"))
    sp.finish()
    if sp.status is StreamStatus.COMPLETE:
        assert sp.branch is not None
        return sp.branch
    assert sp.error is not None
    raise sp.error


def print_canonical(b: BehaviorBranch) -> str:
    """Single-line canonical program text; parse(print_canonical(b)) == b."""
    return f"branch({_fmt_list(b.nodes)})"


def _fmt_list(nodes: tuple[Node, ...]) -> str:
    return "[" + ", ".join(_fmt_node(n) for n in nodes) + "]"


def _fmt_node(node: Node) -> str:
    if isinstance(node, ActionNode):
        args = "".join(f", {format_number(a)}" for a in node.args)
        return f'action("{node.name}"{args})'
    if isinstance(node, ConditionNode):
        pred = print_predicate(node.predicate)
        return (
            f'condition("{pred}", {_fmt_list(node.then_nodes)},'
            f" {_fmt_list(node.else_nodes)})"
        )
    if isinstance(node, ControlNode):
        return f'control("{node.name}")'
    raise TypeError(f"not a node: {node!r}")
