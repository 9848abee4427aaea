"""Append-only command log: one JSON object per line, durable per append.

Every submitted command becomes exactly one record whether it applied or
was rejected.  Each line is written with a single ``write`` call and
fsynced before the append is acknowledged, so a crash can never leave a
torn or duplicated line; recovery just skips any trailing partial line.

Logging is best-effort from the session's point of view: storage errors
are raised to the caller, who logs and plays on.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass

FILENAME = "commands.jsonl"


@dataclass(frozen=True)
class CommandLogRecord:
    session_id: str
    timestamp_ms: int
    player_id: str
    command_text: str
    status: str  # "applied" | "rejected"
    branch_json: str | None = None  # canonical branch encoding; absent on rejection
    latency_ms: int | None = None
    error_code: str | None = None  # set when rejected

    def to_obj(self) -> dict:
        obj = {
            "session_id": self.session_id,
            "timestamp_ms": self.timestamp_ms,
            "player_id": self.player_id,
            "command_text": self.command_text,
            "status": self.status,
        }
        if self.branch_json is not None:
            obj["branch_json"] = self.branch_json
        if self.latency_ms is not None:
            obj["latency_ms"] = self.latency_ms
        if self.error_code is not None:
            obj["error_code"] = self.error_code
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "CommandLogRecord":
        return cls(
            session_id=obj["session_id"],
            timestamp_ms=obj["timestamp_ms"],
            player_id=obj["player_id"],
            command_text=obj["command_text"],
            status=obj["status"],
            branch_json=obj.get("branch_json"),
            latency_ms=obj.get("latency_ms"),
            error_code=obj.get("error_code"),
        )


class FileLogStore:
    """Shared JSONL file; appends are serialized, reads filter by session."""

    def __init__(self, directory: str, fsync: bool = True):
        self.directory = directory
        self.fsync = fsync
        self.path = os.path.join(directory, FILENAME)
        self._lock = threading.Lock()
        os.makedirs(directory, exist_ok=True)

    def append(self, record: CommandLogRecord) -> None:
        line = json.dumps(record.to_obj(), ensure_ascii=False) + "\n"
        data = line.encode("utf-8")
        with self._lock:
            fd = os.open(self.path, os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o644)
            try:
                os.write(fd, data)
                if self.fsync:
                    os.fsync(fd)
            finally:
                os.close(fd)

    def read(
        self,
        session_id: str | None = None,
        player_id: str | None = None,
        since_ms: int | None = None,
        until_ms: int | None = None,
        on_bad_line=None,
    ) -> list[CommandLogRecord]:
        """Matching records in timestamp order (stable on ties).

        Unparseable lines are skipped; ``on_bad_line(lineno, text)`` hears
        about them when provided.
        """
        records: list[CommandLogRecord] = []
        if not os.path.exists(self.path):
            return records
        with open(self.path, "rb") as fh:
            for lineno, raw in enumerate(fh, start=1):
                text = raw.decode("utf-8", "replace").strip()
                if not text:
                    continue
                try:
                    record = CommandLogRecord.from_obj(json.loads(text))
                except (json.JSONDecodeError, KeyError, TypeError):
                    if on_bad_line is not None:
                        on_bad_line(lineno, text)
                    continue
                if session_id is not None and record.session_id != session_id:
                    continue
                if player_id is not None and record.player_id != player_id:
                    continue
                if since_ms is not None and record.timestamp_ms < since_ms:
                    continue
                if until_ms is not None and record.timestamp_ms > until_ms:
                    continue
                records.append(record)
        records.sort(key=lambda r: r.timestamp_ms)
        return records
