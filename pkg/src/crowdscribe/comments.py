"""Comment threads anchored to a block or a suggested edit.

Messages are append-only with dense sequence numbers. Author replies may
carry a raw dictation token pointing at the original spoken input, so
recipients can recover from transcription noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .errors import EmptyText, NotAuthor, ThreadResolved, UnknownAnchor, UnknownThread


@dataclass
class Message:
    author_id: str
    role: str
    text: str
    seq: int
    raw_token: str | None = None

    def to_record(self) -> dict:
        rec = {"author_id": self.author_id, "role": self.role, "text": self.text, "seq": self.seq}
        if self.raw_token is not None:
            rec["raw_token"] = self.raw_token
        return rec


@dataclass
class CommentThread:
    id: str
    anchor: str
    messages: list[Message] = field(default_factory=list)
    resolved: bool = False

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "anchor": self.anchor,
            "resolved": self.resolved,
            "messages": [m.to_record() for m in self.messages],
        }


class CommentBoard:
    """Per-document thread store; anchor existence is checked via a callback."""

    def __init__(self, anchor_exists: Callable[[str], bool], alloc_thread_id: Callable[[], str] | None = None):
        self.threads: dict[str, CommentThread] = {}
        self._anchor_exists = anchor_exists
        self._seq = 0
        self._alloc = alloc_thread_id or self._default_id

    def _default_id(self) -> str:
        self._seq += 1
        return f"thr-{self._seq}"

    def anchor_ok(self, anchor: str) -> bool:
        return self._anchor_exists(anchor)

    def open_thread(
        self,
        anchor: str,
        actor_id: str,
        role: str,
        text: str,
        raw_token: str | None = None,
        thread_id: str | None = None,
    ) -> CommentThread:
        if not text:
            raise EmptyText("a thread needs an opening message")
        if not self._anchor_exists(anchor):
            raise UnknownAnchor(f"anchor {anchor!r} does not resolve")
        thread = CommentThread(id=thread_id or self._alloc(), anchor=anchor)
        thread.messages.append(Message(actor_id, role, text, seq=1, raw_token=raw_token))
        self.threads[thread.id] = thread
        return thread

    def reply(
        self,
        thread_id: str,
        actor_id: str,
        role: str,
        text: str,
        raw_token: str | None = None,
    ) -> Message:
        thread = self.threads.get(thread_id)
        if thread is None:
            raise UnknownThread(f"no thread {thread_id!r}")
        if thread.resolved:
            raise ThreadResolved(f"thread {thread_id} is resolved")
        if not text:
            raise EmptyText("reply text must be non-empty")
        message = Message(actor_id, role, text, seq=len(thread.messages) + 1, raw_token=raw_token)
        thread.messages.append(message)
        return message

    def resolve(self, thread_id: str, resolver_role: str) -> None:
        """Close a thread to further replies. Author-only; idempotent."""
        thread = self.threads.get(thread_id)
        if thread is None:
            raise UnknownThread(f"no thread {thread_id!r}")
        if resolver_role != "author":
            raise NotAuthor("only the author resolves threads")
        thread.resolved = True
