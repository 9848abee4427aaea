"""WebSocket runtime hosting many battle sessions.

One asyncio task per session owns that session's state; connection
readers and translation workers never touch it directly, they post items
onto the session's queue.  Each connection carries one JSON object per
message, exactly the protocol the session logic emits.

Translations run in worker threads (the translator API is blocking) and
come back to the session loop as queue items, so a slow model never
stalls simulation or other sessions.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
import uuid
from dataclasses import dataclass, field

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from .engine import BattleConfig
from .logstore import FileLogStore
from .session import (
    AppendLog,
    BattleSession,
    Broadcast,
    SendTo,
    SessionOver,
    SessionTuning,
    StartTranslation,
)
from .translator import TranslationError, TranslationResult

logger = logging.getLogger(__name__)

JOIN_TIMEOUT_S = 30.0


@dataclass
class ServerTuning:
    # None runs the simulation at real time (one tick per config.tick_dt);
    # tests set a tiny interval to accelerate whole battles.
    tick_interval_s: float | None = None
    session: SessionTuning = field(default_factory=SessionTuning)


class SessionRuntime:
    """Queue, task and connection registry around one BattleSession."""

    def __init__(
        self,
        session: BattleSession,
        store: FileLogStore,
        translate_fn,
        tick_interval: float,
    ):
        self.session = session
        self.store = store
        self.translate_fn = translate_fn
        self.tick_interval = tick_interval
        self.queue: asyncio.Queue = asyncio.Queue()
        self.connections: dict[str, object] = {}
        self.done = asyncio.Event()
        self._claimed = 0

    def claim_slot(self) -> bool:
        """Reserve a player slot; atomic because the hub never awaits
        between checking and claiming."""
        if self.session.phase != "lobby" or self._claimed >= 2:
            return False
        self._claimed += 1
        return True

    async def run(self) -> None:
        next_tick = time.monotonic() + self.tick_interval
        while not self.done.is_set():
            timeout = max(0.0, next_tick - time.monotonic())
            try:
                item = await asyncio.wait_for(self.queue.get(), timeout)
            except asyncio.TimeoutError:
                item = None
            if item is not None:
                await self._dispatch(item)
            if self.done.is_set():
                break
            now = time.monotonic()
            if now >= next_tick:
                await self._execute(self.session.on_tick())
                next_tick = max(next_tick + self.tick_interval, now)

    async def _dispatch(self, item: tuple) -> None:
        kind = item[0]
        if kind == "join":
            _, player_id, name = item
            await self._execute(self.session.add_player(player_id, name))
        elif kind == "message":
            _, player_id, msg = item
            await self._execute(self.session.handle_message(player_id, msg))
        elif kind == "translation":
            _, player_id, text, outcome = item
            await self._execute(
                self.session.handle_translation(player_id, text, outcome)
            )
        elif kind == "disconnect":
            _, player_id = item
            self.connections.pop(player_id, None)
            await self._execute(self.session.on_disconnect(player_id))
        elif kind == "shutdown":
            await self._execute(self.session.on_shutdown())

    async def _execute(self, effects) -> None:
        for effect in effects:
            if isinstance(effect, SendTo):
                await self._send(effect.player_id, effect.message)
            elif isinstance(effect, Broadcast):
                for player_id in list(self.connections):
                    await self._send(player_id, effect.message)
            elif isinstance(effect, AppendLog):
                await self._append(effect)
            elif isinstance(effect, StartTranslation):
                asyncio.get_running_loop().create_task(
                    self._translate(effect.player_id, effect.command_text)
                )
            elif isinstance(effect, SessionOver):
                self.done.set()
                for player_id in list(self.connections):
                    ws = self.connections.pop(player_id)
                    try:
                        await ws.close()
                    except ConnectionClosed:
                        pass

    async def _append(self, effect: AppendLog) -> None:
        # gameplay is never blocked on storage; failures warn the player
        try:
            await asyncio.to_thread(self.store.append, effect.record)
        except OSError as exc:
            logger.error("log append failed: %s", exc)
            await self._send(
                effect.record.player_id,
                {
                    "type": "error",
                    "code": "log_write_failed",
                    "message": "command log write failed; battle continues",
                },
            )

    async def _send(self, player_id: str, message: dict) -> None:
        ws = self.connections.get(player_id)
        if ws is None:
            return
        try:
            await ws.send(json.dumps(message))
        except ConnectionClosed:
            pass

    async def _translate(self, player_id: str, text: str) -> None:
        try:
            outcome: TranslationResult | TranslationError = await asyncio.to_thread(
                self.translate_fn, text
            )
        except TranslationError as exc:
            outcome = exc
        except Exception as exc:  # endpoint adapters may raise anything
            logger.exception("translator crashed")
            outcome = TranslationError("network", str(exc))
        await self.queue.put(("translation", player_id, text, outcome))


class GameServer:
    """Accepts connections, matches them into sessions, runs the sessions."""

    def __init__(
        self,
        config: BattleConfig,
        store: FileLogStore,
        translate_fn,
        tuning: ServerTuning | None = None,
    ):
        self.config = config
        self.store = store
        self.translate_fn = translate_fn
        self.tuning = tuning or ServerTuning()
        self.runtimes: dict[str, SessionRuntime] = {}
        self._tasks: set[asyncio.Task] = set()
        self._server = None

    @property
    def tick_interval(self) -> float:
        if self.tuning.tick_interval_s is not None:
            return self.tuning.tick_interval_s
        return self.config.tick_dt

    async def start(self, host: str, port: int) -> int:
        self._server = await serve(self.handle_connection, host, port)
        return self._server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        for runtime in list(self.runtimes.values()):
            await runtime.queue.put(("shutdown",))
        for task in list(self._tasks):
            try:
                await asyncio.wait_for(task, timeout=5)
            except asyncio.TimeoutError:
                task.cancel()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def handle_connection(self, ws) -> None:
        try:
            raw = await asyncio.wait_for(ws.recv(), timeout=JOIN_TIMEOUT_S)
        except (asyncio.TimeoutError, ConnectionClosed):
            return
        join = _parse_json(raw)
        if (
            not isinstance(join, dict)
            or join.get("type") != "join"
            or not isinstance(join.get("session"), str)
        ):
            await _send_raw(ws, {"type": "error", "code": "bad_message", "message": "expected a join message"})
            await ws.close()
            return
        name = join.get("player_name")
        if not isinstance(name, str) or not name.strip():
            name = "anonymous"

        runtime = self._resolve_session(join["session"])
        if isinstance(runtime, str):  # error code
            await _send_raw(ws, {"type": "error", "code": runtime, "message": "cannot join"})
            await ws.close()
            return

        player_id = str(uuid.uuid4())
        runtime.connections[player_id] = ws
        await runtime.queue.put(("join", player_id, name))
        try:
            async for frame in ws:
                msg = _parse_json(frame)
                if msg is None:
                    await _send_raw(
                        ws,
                        {"type": "error", "code": "bad_message", "message": "frame is not valid JSON"},
                    )
                    continue
                await runtime.queue.put(("message", player_id, msg))
        except ConnectionClosed:
            pass
        finally:
            await runtime.queue.put(("disconnect", player_id))

    def _resolve_session(self, requested: str) -> SessionRuntime | str:
        if requested == "new":
            session_id = str(uuid.uuid4())
            session = BattleSession(
                session_id,
                self.config,
                seed=uuid.uuid4().int & 0x7FFFFFFF,
                tuning=self.tuning.session,
            )
            runtime = SessionRuntime(
                session, self.store, self.translate_fn, self.tick_interval
            )
            runtime.claim_slot()
            self.runtimes[session_id] = runtime
            task = asyncio.get_running_loop().create_task(runtime.run())
            self._tasks.add(task)
            task.add_done_callback(lambda t: self._cleanup(session_id, t))
            return runtime
        runtime = self.runtimes.get(requested)
        if runtime is None:
            return "session_not_found"
        if not runtime.claim_slot():
            return "session_full"
        return runtime

    def _cleanup(self, session_id: str, task: asyncio.Task) -> None:
        self.runtimes.pop(session_id, None)
        self._tasks.discard(task)
        if not task.cancelled() and task.exception() is not None:
            logger.error("session %s crashed", session_id, exc_info=task.exception())


def _parse_json(raw) -> dict | None:
    try:
        obj = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return None
    return obj if isinstance(obj, dict) else None


async def _send_raw(ws, message: dict) -> None:
    try:
        await ws.send(json.dumps(message))
    except ConnectionClosed:
        pass
