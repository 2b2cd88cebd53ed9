"""Append-only event log: the sole source of truth for server state.

One JSON record per line. Appends are flushed and fsynced before the
triggering request is acknowledged, so anything a client ever saw is on
disk. A torn final line (a write cut short by a crash) is dropped on load;
it was never acknowledged. Anything else malformed is an error.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .errors import MalformedLog, StorageFailure

EVENT_KINDS = (
    "doc_created",
    "block_dictated",
    "edit_proposed",
    "edit_reviewed",
    "edit_stale",
    "comment_posted",
    "thread_resolved",
    "task_seeded",
    "task_assigned",
    "task_skipped",
    "task_done",
    "task_escalated",
)


@dataclass(frozen=True)
class Event:
    seq: int
    doc_id: str
    kind: str
    payload: dict
    wall_time: float = 0.0  # informational only; excluded from replay semantics

    def to_record(self) -> dict:
        return {
            "seq": self.seq,
            "doc_id": self.doc_id,
            "kind": self.kind,
            "payload": self.payload,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Event":
        try:
            return cls(
                seq=rec["seq"],
                doc_id=rec["doc_id"],
                kind=rec["kind"],
                payload=rec["payload"],
                wall_time=rec.get("wall_time", 0.0),
            )
        except (KeyError, TypeError) as exc:
            raise MalformedLog(rec.get("seq"), f"bad event record: {exc}") from exc


@dataclass
class EventLog:
    """Disk-backed appender; pass path=None for a purely in-memory server."""

    path: Path | None = None
    crash_hook: Callable[[], None] | None = field(default=None, repr=False)
    _fh: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.path is not None:
            self.path = Path(self.path)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "ab")

    def append(self, events: list[Event]) -> None:
        """Durably append one mutation's events as a single write."""
        blob = b"".join(
            json.dumps(e.to_record(), ensure_ascii=False).encode("utf-8") + b"\n"
            for e in events
        )
        if self.crash_hook is not None:
            self.crash_hook()
        if self._fh is None:
            return
        try:
            self._fh.write(blob)
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"log append failed: {exc}") from exc

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_log(path: Path | str) -> list[Event]:
    """Load and validate a log file: gap-free seqs starting at 1."""
    events: list[Event] = []
    raw = Path(path).read_bytes()
    lines = raw.split(b"\n")
    # Anything after the last newline is a torn, never-acknowledged write.
    lines.pop()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            rec = json.loads(line.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise MalformedLog(None, f"undecodable log line {i + 1}") from exc
        event = Event.from_record(rec)
        if event.kind not in EVENT_KINDS:
            raise MalformedLog(event.seq, f"unknown event kind {event.kind!r}")
        if event.seq != len(events) + 1:
            raise MalformedLog(event.seq, f"seq gap: expected {len(events) + 1}")
        events.append(event)
    return events


def now() -> float:
    return time.time()
