"""Operator entry points: serve battles, replay scripts, inspect logs.

Exit codes: 0 success, 2 usage/config error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import signal
import sys

from .engine import BattleConfig
from .logstore import FileLogStore
from .replay import ReplayScript, ScriptError, run_replay
from .server import GameServer, ServerTuning
from .session import SessionTuning
from .translator import (
    ModelEndpointConfig,
    PromptTemplate,
    mock_translation_result,
    translate,
)

logger = logging.getLogger(__name__)


def load_config(path: str | None) -> BattleConfig:
    """One config path for every mode; defaults when no file is given."""
    if path is None:
        return BattleConfig()
    if not os.path.exists(path):
        raise SystemExit(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return BattleConfig.from_json(fh.read())
        except ValueError as exc:
            raise SystemExit(f"bad config {path}: {exc}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmdarena")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the battle server")
    serve.add_argument("--addr", default="127.0.0.1:8080", help="host:port to bind")
    serve.add_argument("--config", default=None, help="battle config JSON file")
    serve.add_argument("--log-dir", default="./logs", help="command log directory")
    serve.add_argument("--exemplars", default=None, help="prompt exemplar JSON file")
    serve.add_argument(
        "--translator",
        choices=("mock", "llm"),
        default="mock",
        help="mock keyword rules (offline) or a live model endpoint from env",
    )
    serve.add_argument(
        "--speed",
        type=float,
        default=1.0,
        help="simulation speed multiplier (ticks per wall second scale)",
    )

    replay = sub.add_parser("replay", help="run a scripted headless battle")
    replay.add_argument("script", help="replay script JSON file")
    replay.add_argument("--config", default=None, help="battle config JSON file")
    replay.add_argument(
        "--out", default="transcript.jsonl", help="transcript output path"
    )

    logs = sub.add_parser("logs", help="inspect command logs")
    logs.add_argument("--log-dir", default="./logs", help="command log directory")
    logs.add_argument("--session", default=None, help="filter by session id")
    logs.add_argument("--player", default=None, help="filter by player id")
    logs.add_argument("--since", type=int, default=None, help="min timestamp (ms)")
    logs.add_argument("--until", type=int, default=None, help="max timestamp (ms)")
    logs.add_argument("--format", choices=("jsonl", "table"), default="jsonl")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "replay":
            return _cmd_replay(args)
        return _cmd_logs(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 2
        raise


def _cmd_serve(args) -> int:
    config = load_config(args.config)
    if args.speed <= 0:
        raise SystemExit("--speed must be positive")
    store = FileLogStore(args.log_dir)
    translate_fn = _make_translator(args)
    tuning = ServerTuning(
        tick_interval_s=config.tick_dt / args.speed if args.speed != 1.0 else None,
        session=SessionTuning(),
    )
    host, _, port_text = args.addr.partition(":")
    try:
        port = int(port_text)
    except ValueError:
        raise SystemExit(f"bad --addr {args.addr!r}, expected host:port")

    async def run() -> int:
        server = GameServer(config, store, translate_fn, tuning)
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, stop.set)
        try:
            bound = await server.start(host or "127.0.0.1", port)
        except OSError as exc:
            print(f"cannot bind {args.addr}: {exc}", file=sys.stderr)
            return 1
        logger.info("serving on %s:%d (translator=%s)", host, bound, args.translator)
        await stop.wait()
        logger.info("shutting down, ending live sessions")
        await server.stop()
        return 0

    return asyncio.run(run())


def _make_translator(args):
    if args.translator == "mock":
        return mock_translation_result
    try:
        endpoint = ModelEndpointConfig.from_env()
    except ValueError as exc:
        raise SystemExit(str(exc))
    if args.exemplars:
        if not os.path.exists(args.exemplars):
            raise SystemExit(f"exemplar file not found: {args.exemplars}")
        template = PromptTemplate.from_file(args.exemplars)
    else:
        template = PromptTemplate.default()
    return lambda text: translate(text, endpoint, template)


def _cmd_replay(args) -> int:
    config = load_config(args.config)
    if not os.path.exists(args.script):
        raise SystemExit(f"script file not found: {args.script}")
    with open(args.script, encoding="utf-8") as fh:
        text = fh.read()
    try:
        script = ReplayScript.from_json(text)
    except ScriptError as exc:
        raise SystemExit(f"bad script {args.script}: {exc}")
    seed_override = os.environ.get("REPLAY_SEED")
    if seed_override is not None:
        try:
            script = ReplayScript(int(seed_override), script.commands)
        except ValueError:
            raise SystemExit(f"REPLAY_SEED must be an integer, got {seed_override!r}")
    result = run_replay(script, config)
    with open(args.out, "w", encoding="utf-8") as fh:
        for line in result.transcript:
            fh.write(line + "\n")
    outcome = result.outcome
    print(
        f"winner={outcome.winner} reason={outcome.reason} "
        f"ticks={result.world.tick} transcript={args.out}"
    )
    return 0


def _cmd_logs(args) -> int:
    store = FileLogStore(args.log_dir, fsync=False)

    def warn(lineno: int, _text: str) -> None:
        print(f"warning: skipping corrupt log line {lineno}", file=sys.stderr)

    records = store.read(
        session_id=args.session,
        player_id=args.player,
        since_ms=args.since,
        until_ms=args.until,
        on_bad_line=warn,
    )
    if args.format == "jsonl":
        for record in records:
            print(json.dumps(record.to_obj(), ensure_ascii=False))
        return 0
    headers = ("session_id", "timestamp_ms", "player_id", "command", "status")
    rows = [
        (
            r.session_id,
            str(r.timestamp_ms),
            r.player_id,
            r.command_text,
            r.status if r.error_code is None else f"{r.status}({r.error_code})",
        )
        for r in records
    ]
    widths = [
        max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
        for i, h in enumerate(headers)
    ]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    for row in rows:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
