import asyncio
import json
import time

from websockets.asyncio.client import connect

from cmdarena.engine import BattleConfig
from cmdarena.logstore import FileLogStore
from cmdarena.server import GameServer, ServerTuning
from cmdarena.session import SessionTuning
from cmdarena.translator import mock_translation_result


def run(coro):
    return asyncio.run(asyncio.wait_for(coro, timeout=30))


class Client:
    def __init__(self, ws):
        self.ws = ws
        self.seen: list[dict] = []

    @classmethod
    async def join(cls, port: int, session: str = "new", name: str = "tester"):
        ws = await connect(f"ws://127.0.0.1:{port}")
        await ws.send(
            json.dumps({"type": "join", "session": session, "player_name": name})
        )
        return cls(ws)

    async def send(self, obj: dict) -> None:
        await self.ws.send(json.dumps(obj))

    async def send_raw(self, text: str) -> None:
        await self.ws.send(text)

    async def recv(self, timeout: float = 10.0) -> dict:
        msg = json.loads(await asyncio.wait_for(self.ws.recv(), timeout))
        self.seen.append(msg)
        return msg

    async def recv_type(self, mtype: str, timeout: float = 10.0) -> dict:
        deadline = time.monotonic() + timeout
        while True:
            msg = await self.recv(timeout=max(0.01, deadline - time.monotonic()))
            if msg["type"] == mtype:
                return msg

    async def close(self) -> None:
        await self.ws.close()


async def start_server(tmp_path, tick_interval=0.0005, **session_tuning):
    store = FileLogStore(str(tmp_path), fsync=False)
    tuning = ServerTuning(
        tick_interval_s=tick_interval, session=SessionTuning(**session_tuning)
    )
    server = GameServer(BattleConfig(), store, mock_translation_result, tuning)
    port = await server.start("127.0.0.1", 0)
    return server, store, port


async def start_pair(tmp_path, **kwargs):
    server, store, port = await start_server(tmp_path, **kwargs)
    a = await Client.join(port)
    joined_a = await a.recv_type("joined")
    b = await Client.join(port, session=joined_a["session_id"])
    joined_b = await b.recv_type("joined")
    await a.recv_type("start")
    await b.recv_type("start")
    return server, store, port, a, b, joined_a, joined_b


def test_join_and_battle_starts(tmp_path):
    async def scenario():
        server, _, _, a, b, joined_a, joined_b = await start_pair(tmp_path)
        assert joined_a["side"] == "A" and joined_b["side"] == "B"
        assert joined_a["session_id"] == joined_b["session_id"]
        state = await a.recv_type("state")
        assert state["agents"][0]["x"] == -8.0
        later = await a.recv_type("state")
        assert later["tick"] > state["tick"]
        await a.close()
        await b.close()
        await server.stop()

    run(scenario())


def test_unknown_session_and_full_session(tmp_path):
    async def scenario():
        server, _, port, a, b, joined_a, _ = await start_pair(tmp_path)
        ghost = await Client.join(port, session="nope")
        err = await ghost.recv_type("error")
        assert err["code"] == "session_not_found"
        third = await Client.join(port, session=joined_a["session_id"])
        err = await third.recv_type("error")
        assert err["code"] == "session_full"
        for c in (a, b, ghost, third):
            await c.close()
        await server.stop()

    run(scenario())


def test_typing_pauses_both_and_cancel_resumes(tmp_path):
    async def scenario():
        server, _, _, a, b, _, _ = await start_pair(tmp_path)
        await a.send({"type": "typing_start"})
        paused_a = await a.recv_type("paused")
        paused_b = await b.recv_type("paused")
        assert paused_a["by"] == "A" and paused_b["by"] == "A"
        await a.send({"type": "typing_cancel"})
        resumed = await b.recv_type("resumed")
        assert resumed["tick"] == paused_b["tick"]
        await a.close()
        await b.close()
        await server.stop()

    run(scenario())


def test_command_applies_branch_and_logs(tmp_path):
    async def scenario():
        server, store, _, a, b, joined_a, _ = await start_pair(tmp_path)
        await a.send({"type": "typing_start"})
        await a.recv_type("paused")
        await a.send({"type": "command", "text": "zap him"})
        branch_a = await a.recv_type("branch")
        branch_b = await b.recv_type("branch")
        assert branch_a == branch_b
        assert branch_a["player"] == "A"
        assert branch_a["command"] == "zap him"
        assert branch_a["branch"]["nodes"][0]["name"] == "thunderbolt"
        await a.recv_type("resumed")
        await server.stop()
        records = store.read(session_id=joined_a["session_id"])
        assert [r.status for r in records] == ["applied"]
        assert records[0].command_text == "zap him"
        await a.close()
        await b.close()

    run(scenario())


def test_malformed_frame_gets_error_and_connection_survives(tmp_path):
    async def scenario():
        server, _, _, a, b, _, _ = await start_pair(tmp_path)
        await a.send_raw("{not json")
        err = await a.recv_type("error")
        assert err["code"] == "bad_message"
        # connection still works afterwards
        await a.send({"type": "typing_start"})
        await a.recv_type("paused")
        await a.close()
        await b.close()
        await server.stop()

    run(scenario())


def test_battle_to_end_with_mock_commands(tmp_path):
    async def scenario():
        server, store, _, a, b, joined_a, _ = await start_pair(tmp_path)
        start = time.monotonic()
        await a.send({"type": "command", "text": "zap him"})
        await a.recv_type("branch")
        await b.send({"type": "command", "text": "stay right there"})
        await b.recv_type("branch")
        end_a = await a.recv_type("end", timeout=20)
        end_b = await b.recv_type("end", timeout=20)
        elapsed = time.monotonic() - start
        assert end_a == end_b
        assert end_a["winner"] == "A" and end_a["reason"] == "ko"
        assert elapsed < 15.0
        await server.stop()
        records = store.read(session_id=joined_a["session_id"])
        assert len(records) == 2
        await a.close()
        await b.close()

    run(scenario())


def test_disconnect_forfeits_after_grace(tmp_path):
    async def scenario():
        server, _, _, a, b, _, _ = await start_pair(
            tmp_path, forfeit_grace_s=0.2
        )
        await b.close()
        end = await a.recv_type("end", timeout=10)
        assert end["winner"] == "A" and end["reason"] == "forfeit"
        await a.close()
        await server.stop()

    run(scenario())


def test_server_shutdown_notifies_players(tmp_path):
    async def scenario():
        server, _, _, a, b, _, _ = await start_pair(tmp_path)
        stop_task = asyncio.create_task(server.stop())
        end = await a.recv_type("end")
        assert end["reason"] == "forfeit" and end["winner"] == "draw"
        await stop_task
        await a.close()
        await b.close()

    run(scenario())
