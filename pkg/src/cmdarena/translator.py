"""Free-form command text -> behavior branch, via a code-generation model.

The live path builds a few-shot prompt, streams completion tokens into the
incremental DSL parser, and cancels the stream the instant the parser has
the complete program (early stop), which is where most of the latency win
comes from.  The offline path is a deterministic keyword mock so tests,
replays and CI never touch a network.

Any failure (network, timeout, non-conformant output, invalid branch)
leaves the player's current branch untouched; the caller surfaces the
error code and the player rephrases.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from importlib import resources
from typing import Iterator, Protocol

import httpx

from .branches import BehaviorBranch, BranchValidationError, validate
from .dsl import StreamParser, StreamStatus, parse, print_canonical

MAX_COMMAND_CHARS = 500

DEFAULT_PREAMBLE = """\
You translate a player's battle command into a behavior-branch program.
Reply with exactly one line of code, no explanation:
branch([<node>, ...])
Nodes:
  action("thunderbolt") | action("iron_tail") | action("tackle")
  action("approach") | action("retreat") | action("move_to", x, z) | action("idle", seconds)
  condition("<predicate>", [<then nodes>], [<else nodes>])
  control("repeat") | control("end")
Predicates compare sensors with < <= > >= == != and combine with and/or/not.
Sensors: distance_to_opponent, self_hp, opponent_hp, self_x, self_z,
opponent_x, opponent_z, elapsed_time, opponent_is_attacking (1 or 0)."""


class TranslationError(Exception):
    """Translation failed; ``code`` is one of the stable error codes:
    empty_command, oversized_command, network, timeout, parse_failed,
    invalid_branch."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class PromptTemplate:
    preamble: str
    exemplars: tuple[tuple[str, str], ...]  # (command text, program text)

    def __post_init__(self) -> None:
        if len(self.exemplars) < 3:
            raise ValueError("need at least 3 exemplars")
        for command, code in self.exemplars:
            tree = parse(code)  # raises if an exemplar is broken
            if parse(print_canonical(tree)) != tree:
                raise ValueError(f"exemplar does not round-trip: {command!r}")

    @classmethod
    def from_pairs(cls, pairs: list[dict], preamble: str = DEFAULT_PREAMBLE) -> "PromptTemplate":
        return cls(preamble, tuple((p["command"], p["code"]) for p in pairs))

    @classmethod
    def from_file(cls, path: str, preamble: str = DEFAULT_PREAMBLE) -> "PromptTemplate":
        with open(path, encoding="utf-8") as fh:
            return cls.from_pairs(json.load(fh), preamble)

    @classmethod
    def default(cls) -> "PromptTemplate":
        text = resources.files("cmdarena.data").joinpath("exemplars.json").read_text("utf-8")
        return cls.from_pairs(json.loads(text))


@dataclass(frozen=True)
class ModelEndpointConfig:
    base_url: str
    api_key: str = ""
    model: str = ""
    timeout_s: float = 30.0
    max_tokens: int = 256

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")

    @classmethod
    def from_env(cls) -> "ModelEndpointConfig":
        base_url = os.environ.get("LLM_API_BASE_URL", "")
        if not base_url:
            raise ValueError("LLM_API_BASE_URL is not set")
        return cls(
            base_url=base_url,
            api_key=os.environ.get("LLM_API_KEY", ""),
            model=os.environ.get("LLM_MODEL", ""),
            timeout_s=float(os.environ.get("LLM_TIMEOUT_S", "30")),
        )


@dataclass(frozen=True)
class TranslationResult:
    branch: BehaviorBranch
    raw_prefix: str  # program text actually consumed from the stream
    latency_ms: float  # request start -> parser complete
    tokens_consumed: int
    early_stopped: bool


class TokenSource(Protocol):
    """Anything that can stream completion text chunks for a prompt."""

    def stream(self, prompt: str) -> Iterator[str]: ...


class HttpTokenSource:
    """Server-sent-events streaming against an OpenAI-style completions API."""

    def __init__(self, config: ModelEndpointConfig):
        self.config = config

    def stream(self, prompt: str) -> Iterator[str]:
        cfg = self.config
        url = cfg.base_url.rstrip("/") + "/completions"
        headers = {}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        payload = {
            "model": cfg.model,
            "prompt": prompt,
            "max_tokens": cfg.max_tokens,
            "stream": True,
        }
        with httpx.Client(timeout=cfg.timeout_s) as client:
            with client.stream("POST", url, json=payload, headers=headers) as response:
                response.raise_for_status()
                for line in response.iter_lines():
                    if not line.startswith("data:"):
                        continue
                    data = line[len("data:"):].strip()
                    if data == "[DONE]":
                        return
                    text = _chunk_text(json.loads(data))
                    if text:
                        yield text


def _chunk_text(obj: dict) -> str:
    choices = obj.get("choices") or [{}]
    first = choices[0]
    if "text" in first:
        return first["text"] or ""
    return (first.get("delta") or {}).get("content") or ""


def build_prompt(template: PromptTemplate, command: str) -> str:
    """Deterministic few-shot prompt; rejects bad commands before any I/O."""
    trimmed = command.strip()
    if not trimmed:
        raise TranslationError("empty_command", "command is empty")
    if len(trimmed) > MAX_COMMAND_CHARS:
        raise TranslationError(
            "oversized_command",
            f"command is {len(trimmed)} chars (limit {MAX_COMMAND_CHARS})",
        )
    parts = [template.preamble, ""]
    for example_command, code in template.exemplars:
        parts.append(f"Command: {example_command}")
        parts.append(f"Code: {code}")
        parts.append("")
    parts.append(f"Command: {trimmed}")
    parts.append("Code:")
    return "\n".join(parts)


def translate(
    command: str,
    endpoint: ModelEndpointConfig | None = None,
    template: PromptTemplate | None = None,
    *,
    source: TokenSource | None = None,
    early_stop: bool = True,
    timeout_s: float | None = None,
) -> TranslationResult:
    """Stream a completion into the parser, stopping at the closing bracket.

    ``source`` overrides the HTTP endpoint (used by tests and the mock
    pipeline); with ``early_stop=False`` the full stream is drained before
    returning, which exists so the latency win is measurable.
    """
    if template is None:
        template = PromptTemplate.default()
    prompt = build_prompt(template, command)
    if source is None:
        if endpoint is None:
            raise ValueError("either endpoint or source is required")
        source = HttpTokenSource(endpoint)
    if timeout_s is None and endpoint is not None:
        timeout_s = endpoint.timeout_s

    parser = StreamParser()
    raw = bytearray()
    tokens_consumed = 0
    completed_at: float | None = None
    early_stopped = False
    start = time.perf_counter()
    deadline = None if timeout_s is None else start + timeout_s

    stream = source.stream(prompt)
    try:
        while True:
            if deadline is not None and time.perf_counter() > deadline:
                raise TranslationError("timeout", f"no complete program within {timeout_s}s")
            try:
                chunk = next(stream)
            except StopIteration:
                break
            except httpx.TimeoutException as exc:
                raise TranslationError("timeout", str(exc)) from exc
            except httpx.HTTPError as exc:
                raise TranslationError("network", str(exc)) from exc
            tokens_consumed += 1
            if parser.status is StreamStatus.INCOMPLETE:
                data = chunk.encode("utf-8")
                raw.extend(data)
                status = parser.feed(data)
                if status is not StreamStatus.INCOMPLETE:
                    completed_at = time.perf_counter()
                    if early_stop:
                        early_stopped = status is StreamStatus.COMPLETE
                        break
    finally:
        close = getattr(stream, "close", None)
        if close is not None:
            close()

    parser.finish()
    if parser.status is not StreamStatus.COMPLETE:
        error = parser.error
        if isinstance(error, BranchValidationError):
            raise TranslationError("invalid_branch", str(error))
        raise TranslationError("parse_failed", str(error or "no program in stream"))

    branch = parser.branch
    assert branch is not None
    report = validate(branch)  # re-checked, not assumed
    if not report.ok:
        raise TranslationError("invalid_branch", str(BranchValidationError(report)))
    if completed_at is None:
        completed_at = time.perf_counter()
    return TranslationResult(
        branch=branch,
        raw_prefix=bytes(raw[: parser.consumed_bytes]).decode("utf-8", "replace"),
        latency_ms=(completed_at - start) * 1000.0,
        tokens_consumed=tokens_consumed,
        early_stopped=early_stopped,
    )


# --- deterministic offline translator --------------------------------

_KITE_ZAP = 'branch([condition("distance_to_opponent < 8", [action("retreat")], [action("thunderbolt")]), control("repeat")])'
_APPROACH_TAIL = 'branch([condition("distance_to_opponent > 2", [action("approach")], [action("iron_tail")]), control("repeat")])'
_APPROACH_TACKLE = 'branch([condition("distance_to_opponent > 5", [action("approach")], [action("tackle")]), control("repeat")])'
_KEEP_AWAY = 'branch([condition("distance_to_opponent < 12", [action("retreat")], [action("idle", 0.5)]), control("repeat")])'
_DEFAULT = 'branch([action("approach"), control("repeat")])'

_RANGED_WORDS = ("thunder", "zap")
_TAIL_WORDS = ("tail",)
_TACKLE_WORDS = ("tackle", "charge")
_AWAY_WORDS = ("away", "distance", "retreat")
_CLOSE_WORDS = ("close", "approach")


def mock_translate(command: str) -> BehaviorBranch:
    """Keyword-rule translation; pure, total, and stable.

    Rules, first match wins (composite rules before simple ones):

    1.  away/distance/retreat + thunder/zap  -> kite-and-zap circuit
    2.  close/approach + tail               -> approach-then-iron-tail circuit
    3.  close/approach + tackle/charge      -> approach-then-tackle circuit
    4.  thunder/zap                         -> repeat thunderbolt
    5.  tail                                -> repeat iron tail
    6.  tackle/charge                       -> repeat tackle
    7.  away/distance/retreat               -> keep-away circuit
    8.  close/approach                      -> approach-then-iron-tail circuit
    9.  anything else                       -> approach and repeat
    """
    text = command.lower()

    def has(words: tuple[str, ...]) -> bool:
        return any(w in text for w in words)

    if has(_AWAY_WORDS) and has(_RANGED_WORDS):
        program = _KITE_ZAP
    elif has(_CLOSE_WORDS) and has(_TAIL_WORDS):
        program = _APPROACH_TAIL
    elif has(_CLOSE_WORDS) and has(_TACKLE_WORDS):
        program = _APPROACH_TACKLE
    elif has(_RANGED_WORDS):
        program = 'branch([action("thunderbolt"), control("repeat")])'
    elif has(_TAIL_WORDS):
        program = 'branch([action("iron_tail"), control("repeat")])'
    elif has(_TACKLE_WORDS):
        program = 'branch([action("tackle"), control("repeat")])'
    elif has(_AWAY_WORDS):
        program = _KEEP_AWAY
    elif has(_CLOSE_WORDS):
        program = _APPROACH_TAIL
    else:
        program = _DEFAULT
    return parse(program)


def mock_translation_result(command: str) -> TranslationResult:
    """Run the keyword mock but package it like a live translation."""
    start = time.perf_counter()
    tree = mock_translate(command)
    return TranslationResult(
        branch=tree,
        raw_prefix=print_canonical(tree),
        latency_ms=(time.perf_counter() - start) * 1000.0,
        tokens_consumed=0,
        early_stopped=False,
    )


def split_into_tokens(text: str, count: int) -> list[str]:
    """Chop text into exactly ``count`` non-empty chunks (len(text) >= count)."""
    if count > len(text):
        raise ValueError("more tokens than characters")
    size, remainder = divmod(len(text), count)
    tokens = []
    pos = 0
    for i in range(count):
        width = size + (1 if i < remainder else 0)
        tokens.append(text[pos : pos + width])
        pos += width
    return tokens


class MockTokenSource:
    """Serves a fixed token list with an optional per-token delay, counting
    what was actually pulled so tests can assert early-stop behavior."""

    def __init__(self, tokens: list[str], delay_s: float = 0.0):
        self.tokens = list(tokens)
        self.delay_s = delay_s
        self.tokens_served = 0
        self.bytes_served = 0

    def stream(self, prompt: str) -> Iterator[str]:
        for chunk in self.tokens:
            if self.delay_s:
                time.sleep(self.delay_s)
            self.tokens_served += 1
            self.bytes_served += len(chunk.encode("utf-8"))
            yield chunk
