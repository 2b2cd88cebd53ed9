"""Serializing orchestrator: sessions, request dispatch, event log, replay.

Every state-mutating request runs under one lock in three phases: validate
(pure checks, structured errors, no state change), append (the mutation's
events are flushed to disk before anything else happens), apply (in-memory
state catches up through the same appliers replay uses). Replay re-executes
the appliers for a recorded log and cross-checks every value it reproduces --
ids, revisions, assignments -- so identical logs yield identical digests.

Sessions and wall-clock times live outside the replayed state on purpose.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from pathlib import Path

from . import eventlog
from .comments import CommentBoard
from .document import (
    BULLET,
    DocumentTree,
    canonical_json,
    document_pages,
    parse_seed_outline,
    to_structured,
)
from .errors import (
    AlreadyDone,
    AlreadyResolved,
    EmptyText,
    KindMismatch,
    MalformedLog,
    NotAssignee,
    ServiceError,
    StaleEdit,
    ThreadResolved,
    Unauthorized,
    UnknownAnchor,
    UnknownDocument,
    UnknownEdit,
    UnknownRoute,
    UnknownTarget,
    UnknownTask,
    UnknownThread,
)
from .eventlog import Event, EventLog, read_log
from .randomness import SeededSource
from .suggestions import (
    INSERT,
    PENDING,
    STALE,
    SuggestionBook,
    classify_metrics,
    toggle_done,
)
from .tasks import ASSIGNED, DONE, ESCALATED, OPEN, TaskBoard

AUTHOR = "author"
WORKER = "worker"

# route id -> required role ("any" admits both)
ROUTES = {
    "create_document": AUTHOR,
    "get_document": "any",
    "dictate_block": AUTHOR,
    "set_block_done": AUTHOR,
    "propose_edit": WORKER,
    "review_edit": AUTHOR,
    "get_edit_context": "any",
    "get_thumbnails": "any",
    "open_thread": "any",
    "reply_thread": "any",
    "resolve_thread": AUTHOR,
    "next_task": WORKER,
    "skip_task": WORKER,
    "complete_task": WORKER,
    "reopen_task": AUTHOR,
    "poll_events": "any",
    "get_metrics": "any",
}

MUTATING_ROUTES = frozenset(
    {
        "create_document",
        "dictate_block",
        "set_block_done",
        "propose_edit",
        "review_edit",
        "open_thread",
        "reply_thread",
        "resolve_thread",
        "next_task",
        "skip_task",
        "complete_task",
        "reopen_task",
    }
)


@dataclass
class Session:
    token: str
    actor_id: str
    role: str
    doc_id: str | None


class ServerCore:
    """Single-node authority over documents, suggestions, comments, tasks."""

    def __init__(
        self,
        data_dir: str | Path | None = None,
        page_height: int = 40,
        rng_seed: int = 0,
    ):
        self.page_height = page_height
        self.rng_seed = rng_seed
        self._lock = threading.RLock()
        self._new_events = threading.Condition(self._lock)
        self.docs: dict[str, DocumentTree] = {}
        self.books: dict[str, SuggestionBook] = {}
        self.boards: dict[str, TaskBoard] = {}
        self.comments: dict[str, CommentBoard] = {}
        self.edit_docs: dict[str, str] = {}
        self.thread_docs: dict[str, str] = {}
        self.task_docs: dict[str, str] = {}
        self.events: list[Event] = []
        self.sessions: dict[str, Session] = {}
        self.rng = SeededSource(rng_seed)
        self._counters: dict[str, int] = {}
        self._token_seq = 0
        log_path = Path(data_dir) / "events.log" if data_dir is not None else None
        self.log = EventLog(log_path)

    # --- id allocation ---

    def _peek_id(self, prefix: str) -> str:
        return f"{prefix}-{self._counters.get(prefix, 0) + 1}"

    def _alloc_id(self, prefix: str) -> str:
        self._counters[prefix] = self._counters.get(prefix, 0) + 1
        return f"{prefix}-{self._counters[prefix]}"

    # --- sessions (not event-sourced; they do not survive a restart) ---

    def create_session(self, actor_id: str, role: str, doc_id: str | None = None) -> Session:
        """Issue a session token. A new author session revokes the old one."""
        if role not in (AUTHOR, WORKER):
            raise Unauthorized(f"unknown role {role!r}")
        with self._lock:
            if doc_id is not None and doc_id not in self.docs:
                raise UnknownDocument(f"no document {doc_id!r}")
            if role == WORKER and doc_id is None:
                raise Unauthorized("worker sessions must be scoped to a document")
            if role == AUTHOR and doc_id is not None:
                for token, existing in list(self.sessions.items()):
                    if existing.role == AUTHOR and existing.doc_id == doc_id:
                        del self.sessions[token]
            self._token_seq += 1
            session = Session(
                token=f"tok-{self._token_seq}-{actor_id}",
                actor_id=actor_id,
                role=role,
                doc_id=doc_id,
            )
            self.sessions[session.token] = session
            return session

    def _session_for(self, token: str) -> Session:
        session = self.sessions.get(token)
        if session is None:
            raise Unauthorized("invalid or revoked session token")
        return session

    def active_workers(self, doc_id: str) -> set[str]:
        return {
            s.actor_id
            for s in self.sessions.values()
            if s.role == WORKER and s.doc_id == doc_id
        }

    # --- event plumbing ---

    def _next_seq(self) -> int:
        return (self.events[-1].seq if self.events else 0) + 1

    def _emit(self, drafts: list[tuple[str, str, dict]]) -> list[Event]:
        """Durably append one mutation's events, then publish them."""
        seq = self._next_seq()
        batch = [
            Event(seq=seq + i, doc_id=doc_id, kind=kind, payload=payload, wall_time=eventlog.now())
            for i, (doc_id, kind, payload) in enumerate(drafts)
        ]
        self.log.append(batch)  # raises before any in-memory effect
        self.events.extend(batch)
        self._new_events.notify_all()
        return batch

    # --- public entry point ---

    def handle(self, route: str, token: str, payload: dict | None = None) -> dict:
        """Dispatch a request to the operation bound to the route.

        Role-gates the session, serializes mutations, and appends each
        mutation's events atomically before returning.
        """
        payload = payload or {}
        required = ROUTES.get(route)
        if required is None:
            raise UnknownRoute(f"no route {route!r}")
        with self._lock:
            session = self._session_for(token)
            if required != "any" and session.role != required:
                raise Unauthorized(f"route {route} requires the {required} role")
            return getattr(self, f"_route_{route}")(session, payload)

    def _doc_for(self, session: Session, payload: dict) -> str:
        if session.doc_id is None:
            raise Unauthorized("session is not bound to a document yet")
        doc_id = payload.get("doc_id") or session.doc_id
        if doc_id != session.doc_id:
            raise Unauthorized("session is scoped to a different document")
        if doc_id not in self.docs:
            raise UnknownDocument(f"no document {doc_id!r}")
        return doc_id

    # --- documents ---

    def _route_create_document(self, session: Session, payload: dict) -> dict:
        outline = payload.get("seed_outline", "")
        templates = payload.get("task_templates", [])
        doc_id = self._peek_id("doc")
        preview = parse_seed_outline(outline, doc_id)  # validates the grammar
        resolved = TaskBoard().seed(preview, templates)  # validates titles too
        drafts: list[tuple[str, str, dict]] = [
            (doc_id, "doc_created", {"doc_id": doc_id, "seed_outline": outline})
        ]
        base = self._counters.get("tsk", 0)
        for i, task in enumerate(resolved, start=1):
            drafts.append(
                (doc_id, "task_seeded", {
                    "task_id": f"tsk-{base + i}",
                    "description": task.description,
                    "target_section": task.target_section,
                })
            )
        batch = self._emit(drafts)
        self._apply_doc_created(batch[0].payload)
        for event in batch[1:]:
            self._apply_task_seeded(doc_id, event.payload, event.seq)
        if session.doc_id is None:
            session.doc_id = doc_id
        return {"doc_id": doc_id, "revision": self.docs[doc_id].revision}

    def _apply_doc_created(self, payload: dict) -> None:
        doc_id = self._alloc_id("doc")
        if doc_id != payload["doc_id"]:
            raise MalformedLog(None, f"doc id mismatch: {doc_id} != {payload['doc_id']}")
        doc = parse_seed_outline(payload["seed_outline"], doc_id)
        self.docs[doc_id] = doc
        self.books[doc_id] = SuggestionBook(
            doc,
            page_height=self.page_height,
            alloc_edit_id=lambda: self._alloc_id("edt"),
            alloc_block_id=self._make_block_alloc(doc),
        )
        self.boards[doc_id] = TaskBoard()
        self.comments[doc_id] = CommentBoard(
            anchor_exists=self._make_anchor_check(doc_id),
            alloc_thread_id=lambda: self._alloc_id("thr"),
        )

    def _make_block_alloc(self, doc: DocumentTree):
        def alloc() -> str:
            block_id = doc.peek_auto_block_id()
            doc._auto_id = int(block_id.rsplit("-", 1)[1])
            return block_id

        return alloc

    def _make_anchor_check(self, doc_id: str):
        def check(anchor: str) -> bool:
            return anchor in self.docs[doc_id].blocks or anchor in self.books[doc_id].edits

        return check

    def _apply_task_seeded(self, doc_id: str, payload: dict, seq: int) -> None:
        board = self.boards[doc_id]
        if payload.get("op") == "reopen":
            board.reopen(payload["task_id"])
            return
        task_id = self._alloc_id("tsk")
        if task_id != payload["task_id"]:
            raise MalformedLog(seq, f"task id mismatch: {task_id} != {payload['task_id']}")
        board.seed(
            self.docs[doc_id],
            [{"description": payload["description"], "target_section": payload.get("target_section")}],
            created_seq=seq,
            task_ids=[task_id],
        )
        self.task_docs[task_id] = doc_id

    def _route_get_document(self, session: Session, payload: dict) -> dict:
        doc_id = self._doc_for(session, payload)
        return to_structured(self.docs[doc_id])

    def _route_get_thumbnails(self, session: Session, payload: dict) -> dict:
        doc_id = self._doc_for(session, payload)
        pages = document_pages(self.docs[doc_id], self.page_height)
        return {
            "pages": [
                {
                    "page_index": p.index,
                    "first_line": p.lines[0] if p.lines else "",
                    "block_ids": p.block_ids,
                }
                for p in pages
            ]
        }

    # --- author dictation ---

    def _route_dictate_block(self, session: Session, payload: dict) -> dict:
        doc_id = self._doc_for(session, payload)
        doc = self.docs[doc_id]
        book = self.books[doc_id]
        parent_id = payload.get("parent_id", "")
        after_id = payload.get("after_id")
        kind = payload.get("kind")
        doc.check_insert(parent_id, after_id, kind)
        block_id = doc.peek_auto_block_id()
        event_payload = {
            "op": "insert",
            "block_id": block_id,
            "parent_id": parent_id,
            "after_id": after_id,
            "kind": kind,
            "text": payload.get("text", ""),
            "raw_token": payload.get("raw_token"),
            "revision": doc.revision + 1,
        }
        stale = book.stale_candidates(set(), anchor=(parent_id, after_id))
        drafts = [(doc_id, "block_dictated", event_payload)]
        drafts += [(doc_id, "edit_stale", {"edit_id": eid}) for eid in stale]
        self._emit(drafts)
        self._apply_block_dictated(doc_id, event_payload)
        return {"block_id": block_id, "revision": doc.revision}

    def _route_set_block_done(self, session: Session, payload: dict) -> dict:
        doc_id = self._doc_for(session, payload)
        doc = self.docs[doc_id]
        book = self.books[doc_id]
        block_id = payload.get("block_id")
        done = bool(payload.get("done", True))
        block = doc.blocks.get(block_id)
        if block is None:
            raise UnknownTarget(f"no block {block_id!r}")
        if block.kind != BULLET:
            raise KindMismatch("done flag applies to bullets only")
        event_payload = {
            "op": "set_done",
            "block_id": block_id,
            "done": done,
            "revision": doc.revision + 1,
        }
        stale = book.stale_candidates({block_id})
        drafts = [(doc_id, "block_dictated", event_payload)]
        drafts += [(doc_id, "edit_stale", {"edit_id": eid}) for eid in stale]
        self._emit(drafts)
        self._apply_block_dictated(doc_id, event_payload)
        return {"revision": doc.revision}

    def _apply_block_dictated(self, doc_id: str, payload: dict) -> None:
        doc = self.docs[doc_id]
        book = self.books[doc_id]
        if payload["op"] == "insert":
            block_id, rev = doc.insert_block(
                payload["parent_id"],
                payload.get("after_id"),
                payload["kind"],
                payload.get("text", ""),
                raw_token=payload.get("raw_token"),
            )
            if block_id != payload["block_id"] or rev != payload["revision"]:
                raise MalformedLog(None, "dictation replay diverged from the log")
            anchor = (payload["parent_id"], payload.get("after_id"))
            book.applied_anchors[anchor] = rev
            book.mark_stale_for_mutation(set(), anchor=anchor)
        elif payload["op"] == "set_done":
            rev = toggle_done(doc, payload["block_id"], payload["done"])
            if rev != payload["revision"]:
                raise MalformedLog(None, "done-toggle replay diverged from the log")
            book.mark_stale_for_mutation({payload["block_id"]})
        else:
            raise MalformedLog(None, f"unknown dictation op {payload['op']!r}")

    # --- suggestions ---

    def _route_propose_edit(self, session: Session, payload: dict) -> dict:
        doc_id = self._doc_for(session, payload)
        doc = self.docs[doc_id]
        book = self.books[doc_id]
        spec = book.normalize_spec(payload.get("spec", {}))
        if spec["kind"] == INSERT:
            spec["new_block_id"] = doc.peek_auto_block_id()
        edit_id = self._peek_id("edt")
        submission_id = payload.get("submission_id") or f"{session.actor_id}/{edit_id}"
        event_payload = {
            "edit_id": edit_id,
            "worker_id": session.actor_id,
            "submission_id": submission_id,
            "base_revision": doc.revision,
            "kind": spec["kind"],
            "spec": spec,
        }
        self._emit([(doc_id, "edit_proposed", event_payload)])
        self._apply_edit_proposed(doc_id, event_payload)
        return {"edit_id": edit_id}

    def _apply_edit_proposed(self, doc_id: str, payload: dict) -> None:
        book = self.books[doc_id]
        spec = dict(payload["spec"])
        spec.pop("new_block_id", None)
        edit = book.propose(payload["worker_id"], payload["submission_id"], spec)
        if edit.id != payload["edit_id"] or edit.spec != payload["spec"]:
            raise MalformedLog(None, "proposal replay diverged from the log")
        self.edit_docs[edit.id] = doc_id

    def _route_review_edit(self, session: Session, payload: dict) -> dict:
        edit_id = payload.get("edit_id")
        doc_id = self.edit_docs.get(edit_id)
        if doc_id is None:
            raise UnknownEdit(f"no edit {edit_id!r}")
        self._doc_for(session, {"doc_id": doc_id})
        book = self.books[doc_id]
        doc = self.docs[doc_id]
        decision = payload.get("decision")
        edit = book.edits[edit_id]
        # Same checks review() performs, run before anything hits the log.
        if decision not in ("accept", "reject"):
            raise UnknownTarget(f"unknown decision {decision!r}")
        if edit.status == STALE:
            raise StaleEdit(f"edit {edit_id} is stale; re-propose against the current revision")
        if edit.status != PENDING:
            raise AlreadyResolved(f"edit {edit_id} already {edit.status}")
        newly_stale: list[str] = []
        applied_revision = None
        if decision == "accept":
            reason = book._stale_reason(edit)
            if reason is not None:
                raise StaleEdit(f"edit {edit_id}: {reason}")
            applied_revision = doc.revision + 1
            mutated = set() if edit.kind == INSERT else {edit.spec["block_id"]}
            newly_stale = book.stale_candidates(mutated, edit.anchor(), exclude=edit.id)
        event_payload = {
            "edit_id": edit_id,
            "decision": decision,
            "kind": edit.kind,
            "submission_id": edit.submission_id,
            "worker_id": edit.worker_id,
            "applied_revision": applied_revision,
        }
        drafts = [(doc_id, "edit_reviewed", event_payload)]
        drafts += [(doc_id, "edit_stale", {"edit_id": eid}) for eid in newly_stale]
        self._emit(drafts)
        self._apply_edit_reviewed(doc_id, event_payload)
        return {"applied_revision": applied_revision, "newly_stale": newly_stale}

    def _apply_edit_reviewed(self, doc_id: str, payload: dict) -> None:
        outcome = self.books[doc_id].review(AUTHOR, payload["edit_id"], payload["decision"])
        if outcome.applied_revision != payload.get("applied_revision"):
            raise MalformedLog(None, "review replay diverged from the log")

    def _route_get_edit_context(self, session: Session, payload: dict) -> dict:
        edit_id = payload.get("edit_id")
        doc_id = self.edit_docs.get(edit_id)
        if doc_id is None:
            raise UnknownEdit(f"no edit {edit_id!r}")
        self._doc_for(session, {"doc_id": doc_id})
        return self.books[doc_id].render_context(edit_id).to_record()

    # --- comments ---

    def _route_open_thread(self, session: Session, payload: dict) -> dict:
        doc_id = self._doc_for(session, payload)
        board = self.comments[doc_id]
        anchor = payload.get("anchor")
        text = payload.get("text", "")
        if not text:
            raise EmptyText("a thread needs an opening message")
        if not board.anchor_ok(anchor):
            raise UnknownAnchor(f"anchor {anchor!r} does not resolve")
        thread_id = self._peek_id("thr")
        event_payload = {
            "thread_id": thread_id,
            "anchor": anchor,
            "actor_id": session.actor_id,
            "role": session.role,
            "text": text,
            "raw_token": payload.get("raw_token"),
            "seq": 1,
            "opened": True,
        }
        self._emit([(doc_id, "comment_posted", event_payload)])
        self._apply_comment_posted(doc_id, event_payload)
        return {"thread_id": thread_id}

    def _route_reply_thread(self, session: Session, payload: dict) -> dict:
        thread_id = payload.get("thread_id")
        doc_id = self.thread_docs.get(thread_id)
        if doc_id is None:
            raise UnknownThread(f"no thread {thread_id!r}")
        self._doc_for(session, {"doc_id": doc_id})
        board = self.comments[doc_id]
        thread = board.threads[thread_id]
        text = payload.get("text", "")
        if thread.resolved:
            raise ThreadResolved(f"thread {thread_id} is resolved")
        if not text:
            raise EmptyText("reply text must be non-empty")
        event_payload = {
            "thread_id": thread_id,
            "anchor": thread.anchor,
            "actor_id": session.actor_id,
            "role": session.role,
            "text": text,
            "raw_token": payload.get("raw_token"),
            "seq": len(thread.messages) + 1,
            "opened": False,
        }
        self._emit([(doc_id, "comment_posted", event_payload)])
        self._apply_comment_posted(doc_id, event_payload)
        return {"seq": event_payload["seq"]}

    def _apply_comment_posted(self, doc_id: str, payload: dict) -> None:
        board = self.comments[doc_id]
        if payload["opened"]:
            thread = board.open_thread(
                payload["anchor"],
                payload["actor_id"],
                payload["role"],
                payload["text"],
                raw_token=payload.get("raw_token"),
            )
            if thread.id != payload["thread_id"]:
                raise MalformedLog(None, "thread id replay diverged from the log")
            self.thread_docs[thread.id] = doc_id
        else:
            message = board.reply(
                payload["thread_id"],
                payload["actor_id"],
                payload["role"],
                payload["text"],
                raw_token=payload.get("raw_token"),
            )
            if message.seq != payload["seq"]:
                raise MalformedLog(None, "reply seq replay diverged from the log")

    def _route_resolve_thread(self, session: Session, payload: dict) -> dict:
        thread_id = payload.get("thread_id")
        doc_id = self.thread_docs.get(thread_id)
        if doc_id is None:
            raise UnknownThread(f"no thread {thread_id!r}")
        self._doc_for(session, {"doc_id": doc_id})
        event_payload = {"thread_id": thread_id}
        self._emit([(doc_id, "thread_resolved", event_payload)])
        self._apply_thread_resolved(doc_id, event_payload)
        return {}

    def _apply_thread_resolved(self, doc_id: str, payload: dict) -> None:
        self.comments[doc_id].resolve(payload["thread_id"], AUTHOR)

    # --- tasks ---

    def _route_next_task(self, session: Session, payload: dict) -> dict:
        doc_id = self._doc_for(session, payload)
        board = self.boards[doc_id]
        held = board.held_by(session.actor_id)
        if held is not None:
            return {"task": held.to_record()}
        claim = payload.get("claim")
        pool = board.eligible_for(session.actor_id)
        if claim is not None:
            pool = [t for t in pool if t.id == claim]
            if not pool:
                return {"task": None}
            chosen, method = pool[0], "claim"
        else:
            if not pool:
                return {"task": None}
            chosen, method = pool[self.rng.choice_index(len(pool))], "random"
        event_payload = {"task_id": chosen.id, "worker_id": session.actor_id, "method": method}
        try:
            self._emit([(doc_id, "task_assigned", event_payload)])
        except ServiceError:
            if method == "random":
                self.rng.draws -= 1  # counter-based source: exact rollback
            raise
        board.apply_assignment(session.actor_id, chosen.id)
        return {"task": chosen.to_record()}

    def _route_skip_task(self, session: Session, payload: dict) -> dict:
        task_id = payload.get("task_id")
        doc_id = self.task_docs.get(task_id)
        if doc_id is None:
            raise UnknownTask(f"no task {task_id!r}")
        self._doc_for(session, {"doc_id": doc_id})
        board = self.boards[doc_id]
        task = board.tasks[task_id]
        if task.state != ASSIGNED or task.assignee != session.actor_id:
            raise NotAssignee(f"task {task_id} is not assigned to {session.actor_id}")
        active = self.active_workers(doc_id)
        # Escalations this skip will trigger, the skipped task included.
        would_escalate = []
        for t in sorted(board.tasks.values(), key=lambda t: t.id):
            state = OPEN if t.id == task_id else t.state
            skips = (t.skip_set | {session.actor_id}) if t.id == task_id else t.skip_set
            if state == OPEN and skips >= active:
                would_escalate.append(t.id)
        drafts = [(doc_id, "task_skipped", {"task_id": task_id, "worker_id": session.actor_id})]
        drafts += [(doc_id, "task_escalated", {"task_id": tid}) for tid in would_escalate]
        self._emit(drafts)
        board.skip(session.actor_id, task_id)
        escalated = board.escalate_check(active)
        if escalated != would_escalate:
            raise MalformedLog(None, "escalation replay diverged from the log")
        return {"escalated": would_escalate}

    def _route_complete_task(self, session: Session, payload: dict) -> dict:
        task_id = payload.get("task_id")
        doc_id = self.task_docs.get(task_id)
        if doc_id is None:
            raise UnknownTask(f"no task {task_id!r}")
        self._doc_for(session, {"doc_id": doc_id})
        board = self.boards[doc_id]
        task = board.tasks[task_id]
        if task.state == DONE:
            raise AlreadyDone(f"task {task_id} already done")
        if task.state != ASSIGNED or task.assignee != session.actor_id:
            raise NotAssignee(f"task {task_id} is not assigned to {session.actor_id}")
        self._emit([(doc_id, "task_done", {"task_id": task_id, "worker_id": session.actor_id})])
        board.complete(session.actor_id, task_id)
        return {}

    def _route_reopen_task(self, session: Session, payload: dict) -> dict:
        task_id = payload.get("task_id")
        doc_id = self.task_docs.get(task_id)
        if doc_id is None:
            raise UnknownTask(f"no task {task_id!r}")
        self._doc_for(session, {"doc_id": doc_id})
        board = self.boards[doc_id]
        task = board.tasks[task_id]
        if task.state == DONE:
            raise AlreadyDone(f"task {task_id} already done")
        if task.state != ESCALATED:
            return {}  # idempotent for open/assigned tasks
        event_payload = {"op": "reopen", "task_id": task_id}
        batch = self._emit([(doc_id, "task_seeded", event_payload)])
        self._apply_task_seeded(doc_id, event_payload, batch[0].seq)
        return {}

    # --- events & metrics ---

    def _visible(self, session: Session, event: Event) -> bool:
        if event.doc_id != session.doc_id:
            return False
        if session.role == AUTHOR:
            return (
                event.kind == "edit_proposed"
                or event.kind == "task_escalated"
                or (event.kind == "comment_posted" and event.payload.get("role") == WORKER)
            )
        return (
            (event.kind == "edit_reviewed" and event.payload.get("worker_id") == session.actor_id)
            or (event.kind == "comment_posted" and event.payload.get("role") == AUTHOR)
            or event.kind.startswith("task_")
        )

    def _route_poll_events(self, session: Session, payload: dict) -> dict:
        doc_id = self._doc_for(session, payload)
        since = int(payload.get("since", 0))
        wait_ms = float(payload.get("wait", 0) or 0)
        deadline = eventlog.now() + wait_ms / 1000.0

        def collect() -> list[Event]:
            return [
                e for e in self.events
                if e.seq > since and e.doc_id == doc_id and self._visible(session, e)
            ]

        found = collect()
        while not found and wait_ms > 0:
            remaining = deadline - eventlog.now()
            if remaining <= 0:
                break
            self._new_events.wait(remaining)
            found = collect()
        return {"events": [e.to_record() for e in found]}

    def _route_get_metrics(self, session: Session, payload: dict) -> dict:
        doc_id = self._doc_for(session, payload)
        doc_events = [e for e in self.events if e.doc_id == doc_id]
        return classify_metrics(doc_events).to_record()

    # --- digest & replay ---

    def state_digest(self) -> str:
        """Hash of the full canonical state; sessions and wall time excluded."""
        with self._lock:
            state = {
                "docs": {doc_id: to_structured(doc) for doc_id, doc in self.docs.items()},
                "edits": {
                    doc_id: [book.edits[eid].to_record() for eid in sorted(book.edits)]
                    for doc_id, book in self.books.items()
                },
                "threads": {
                    doc_id: [board.threads[tid].to_record() for tid in sorted(board.threads)]
                    for doc_id, board in self.comments.items()
                },
                "tasks": {
                    doc_id: [board.tasks[tid].to_record() for tid in sorted(board.tasks)]
                    for doc_id, board in self.boards.items()
                },
                "rng": self.rng.to_record(),
                "counters": dict(sorted(self._counters.items())),
                "last_seq": self.events[-1].seq if self.events else 0,
            }
            return hashlib.sha256(canonical_json(state)).hexdigest()

    def apply_event(self, event: Event) -> None:
        """Replay-side application of one recorded event."""
        expected = self._next_seq()
        if event.seq != expected:
            raise MalformedLog(event.seq, f"seq gap: expected {expected}")
        kind, doc_id, payload = event.kind, event.doc_id, event.payload
        if kind == "doc_created":
            self.events.append(event)
            self._apply_doc_created(payload)
            return
        if doc_id not in self.docs:
            raise MalformedLog(event.seq, f"event for unknown document {doc_id!r}")
        self.events.append(event)
        if kind == "block_dictated":
            self._apply_block_dictated(doc_id, payload)
        elif kind == "edit_proposed":
            self._apply_edit_proposed(doc_id, payload)
        elif kind == "edit_reviewed":
            self._apply_edit_reviewed(doc_id, payload)
        elif kind == "edit_stale":
            edit = self.books[doc_id].edits.get(payload["edit_id"])
            if edit is None:
                raise MalformedLog(event.seq, f"stale marker for unknown edit {payload['edit_id']!r}")
            if edit.status == PENDING:
                edit.status = STALE
        elif kind == "comment_posted":
            self._apply_comment_posted(doc_id, payload)
        elif kind == "thread_resolved":
            self._apply_thread_resolved(doc_id, payload)
        elif kind == "task_seeded":
            self._apply_task_seeded(doc_id, payload, event.seq)
        elif kind == "task_assigned":
            board = self.boards[doc_id]
            if payload["method"] == "random":
                pool = board.eligible_for(payload["worker_id"])
                chosen = pool[self.rng.choice_index(len(pool))] if pool else None
                if chosen is None or chosen.id != payload["task_id"]:
                    raise MalformedLog(event.seq, "assignment replay diverged from the log")
            board.apply_assignment(payload["worker_id"], payload["task_id"])
        elif kind == "task_skipped":
            self.boards[doc_id].skip(payload["worker_id"], payload["task_id"])
        elif kind == "task_done":
            self.boards[doc_id].complete(payload["worker_id"], payload["task_id"])
        elif kind == "task_escalated":
            task = self.boards[doc_id].tasks.get(payload["task_id"])
            if task is None:
                raise MalformedLog(event.seq, "escalation for unknown task")
            task.state = ESCALATED
            task.assignee = None
        else:
            raise MalformedLog(event.seq, f"unknown event kind {kind!r}")


def replay(events: list[Event], page_height: int = 40, rng_seed: int = 0) -> ServerCore:
    """Reconstruct a server from an event log.

    The seed must match the one the live server ran with (replay re-draws
    each randomized assignment and verifies it against the log).
    """
    core = ServerCore(data_dir=None, page_height=page_height, rng_seed=rng_seed)
    for event in events:
        core.apply_event(event)
    return core


def replay_file(path: str | Path, page_height: int = 40, rng_seed: int = 0) -> ServerCore:
    return replay(read_log(path), page_height=page_height, rng_seed=rng_seed)
