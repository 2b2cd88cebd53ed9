"""Suggested-edit lifecycle: propose, review, staleness, metrics.

Workers never touch the canonical tree. A proposal is validated against the
live revision, gets a rendered context snapshot, and waits for the author.
Accepting applies exactly the proposed change and marks conflicting pending
edits stale; a stale edit is terminally dead and must be re-proposed. The
review path re-checks staleness independently of the marking pass, so an
accept can never apply to a block that moved under it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from .document import (
    BULLET,
    PARAGRAPH,
    ROOT,
    SECTION,
    DocumentTree,
    render_lines,
)
from .errors import (
    AlreadyResolved,
    KindMismatch,
    MalformedLog,
    NotAuthor,
    StaleEdit,
    UnknownEdit,
    UnknownTarget,
)

INSERT = "insert"
REPLACE = "replace"
DELETE = "delete"
FORMAT = "format"
EDIT_KINDS = (INSERT, REPLACE, DELETE, FORMAT)

PENDING = "pending"
ACCEPTED = "accepted"
REJECTED = "rejected"
STALE = "stale"

MARK_OPEN = "«"   # «
MARK_CLOSE = "»"  # »

# Suggested deletes are leaf-only: removing a section could orphan children
# inserted after the edit's base revision, which block-granular staleness
# cannot flag (an insert must not count as mutating its parent).
_DELETABLE_KINDS = (PARAGRAPH, BULLET)


@dataclass
class ContextSnapshot:
    edit_id: str
    revision: int
    page_index: int
    lines: list[str]
    excerpt: list[str]

    def to_record(self) -> dict:
        return {
            "edit_id": self.edit_id,
            "revision": self.revision,
            "page_index": self.page_index,
            "lines": list(self.lines),
            "excerpt": list(self.excerpt),
        }


@dataclass
class SuggestedEdit:
    id: str
    worker_id: str
    submission_id: str
    base_revision: int
    kind: str
    spec: dict
    status: str = PENDING
    snapshot: ContextSnapshot | None = None
    applied_revision: int | None = None

    def refs(self) -> set[str]:
        """Blocks this edit reads: target block, or insert parent + anchor."""
        if self.kind == INSERT:
            out = set()
            if self.spec["parent_id"] != ROOT:
                out.add(self.spec["parent_id"])
            if self.spec.get("after_id") is not None:
                out.add(self.spec["after_id"])
            return out
        return {self.spec["block_id"]}

    def anchor(self) -> tuple[str, str | None] | None:
        if self.kind == INSERT:
            return (self.spec["parent_id"], self.spec.get("after_id"))
        return None

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "worker_id": self.worker_id,
            "submission_id": self.submission_id,
            "base_revision": self.base_revision,
            "kind": self.kind,
            "spec": dict(self.spec),
            "status": self.status,
            "applied_revision": self.applied_revision,
            "snapshot": self.snapshot.to_record() if self.snapshot else None,
        }


@dataclass
class ReviewOutcome:
    applied_revision: int | None
    newly_stale: list[str] = field(default_factory=list)


@dataclass
class MetricsSummary:
    submissions: int = 0
    insertions: int = 0
    replacements: int = 0
    deletions: int = 0
    formatting: int = 0
    author_comments: int = 0

    def to_record(self) -> dict:
        return {
            "submissions": self.submissions,
            "insertions": self.insertions,
            "replacements": self.replacements,
            "deletions": self.deletions,
            "formatting": self.formatting,
            "author_comments": self.author_comments,
        }


class SuggestionBook:
    """Per-document store of suggested edits plus the staleness machinery."""

    def __init__(
        self,
        doc: DocumentTree,
        page_height: int = 40,
        alloc_edit_id: Callable[[], str] | None = None,
        alloc_block_id: Callable[[], str] | None = None,
    ):
        self.doc = doc
        self.page_height = page_height
        self.edits: dict[str, SuggestedEdit] = {}
        self._edit_seq = 0
        self._block_seq = 0
        self._alloc_edit_id = alloc_edit_id or self._default_edit_id
        self._alloc_block_id = alloc_block_id or self._default_block_id
        # (parent_id, after_id) -> revision an insert was applied at; feeds
        # the same-anchor collision check in the review-time safety net.
        self.applied_anchors: dict[tuple[str, str | None], int] = {}

    def _default_edit_id(self) -> str:
        self._edit_seq += 1
        return f"edt-{self._edit_seq}"

    def _default_block_id(self) -> str:
        self._block_seq += 1
        candidate = f"sblk-{self._block_seq}"
        while candidate in self.doc.blocks:
            self._block_seq += 1
            candidate = f"sblk-{self._block_seq}"
        return candidate

    def pending(self) -> list[SuggestedEdit]:
        return [e for e in self.edits.values() if e.status == PENDING]

    # --- proposal ---

    def normalize_spec(self, spec: dict) -> dict:
        """Validate a typed edit spec against the live tree. Pure.

        Returns a normalized copy (defaults filled in); the new block id of an
        insert is left unallocated.
        """
        kind = spec.get("kind")
        if kind not in EDIT_KINDS:
            raise UnknownTarget(f"unknown edit kind {kind!r}")
        spec = dict(spec)
        doc = self.doc
        if kind == INSERT:
            parent_id = spec.get("parent_id", ROOT)
            spec["parent_id"] = parent_id
            spec.setdefault("after_id", None)
            block_kind = spec.get("block_kind")
            if parent_id != ROOT and parent_id not in doc.blocks:
                raise UnknownTarget(f"insert parent {parent_id!r} not found")
            parent_kind = ROOT if parent_id == ROOT else doc.blocks[parent_id].kind
            allowed = (SECTION,) if parent_kind == ROOT else (
                (PARAGRAPH, BULLET) if parent_kind == SECTION else ()
            )
            if block_kind not in allowed:
                raise KindMismatch(f"{block_kind!r} not allowed under {parent_kind or 'root'}")
            after_id = spec["after_id"]
            if after_id is not None:
                anchor = doc.blocks.get(after_id)
                if anchor is None or anchor.parent_id != parent_id:
                    raise UnknownTarget(f"insert anchor {after_id!r} not under parent")
            spec.setdefault("new_text", "")
            # The order key is fixed now, against the base revision, so that
            # disjoint accepts commute byte-for-byte. Uniqueness at apply time
            # is guaranteed by the same-anchor staleness rule: any other
            # insert landing in this gap shares the anchor and goes stale.
            spec["order_key"] = doc.key_between_siblings(parent_id, after_id)
        else:
            block = doc.blocks.get(spec.get("block_id"))
            if block is None:
                raise UnknownTarget(f"block {spec.get('block_id')!r} not found")
            if kind == DELETE and block.kind not in _DELETABLE_KINDS:
                raise KindMismatch("only paragraphs and bullets can be deleted")
            if kind == FORMAT:
                if block.kind != BULLET:
                    raise KindMismatch("done flag applies to bullets only")
                spec["done"] = bool(spec.get("done", True))
            if kind == REPLACE:
                spec.setdefault("new_text", "")
        return spec

    def propose(
        self,
        worker_id: str,
        submission_id: str,
        spec: dict,
        edit_id: str | None = None,
    ) -> SuggestedEdit:
        """Validate a typed edit spec against the live tree and file it pending.

        The canonical document is not modified. Insert specs get their new
        block id allocated here so that later accepts commute byte-for-byte.
        """
        spec = self.normalize_spec(spec)
        if spec["kind"] == INSERT and not spec.get("new_block_id"):
            spec["new_block_id"] = self._alloc_block_id()
        edit = SuggestedEdit(
            id=edit_id or self._alloc_edit_id(),
            worker_id=worker_id,
            submission_id=submission_id,
            base_revision=self.doc.revision,
            kind=spec["kind"],
            spec=spec,
        )
        edit.snapshot = self._build_snapshot(edit)
        self.edits[edit.id] = edit
        return edit

    # --- context snapshots ---

    def _region(self, edit: SuggestedEdit) -> tuple[int, int]:
        """Inclusive rendered-line span the edit affects (anchor for inserts)."""
        rendered = render_lines(self.doc)
        if not rendered:
            return (0, 0)

        def span(block_id: str) -> tuple[int, int]:
            rows = [i for i, ln in enumerate(rendered) if ln.block_id == block_id]
            return (rows[0], rows[-1])

        if edit.kind == INSERT:
            after_id = edit.spec.get("after_id")
            if after_id is not None:
                return span(after_id)
            parent_id = edit.spec["parent_id"]
            if parent_id != ROOT:
                first, _ = span(parent_id)
                return (first, first)
            return (0, 0)
        return span(edit.spec["block_id"])

    def _build_snapshot(self, edit: SuggestedEdit) -> ContextSnapshot:
        rendered = [ln.text for ln in render_lines(self.doc)]
        if not rendered:
            # Insertion into an empty document: a lone marker pair stands in
            # for the (empty) page so the bracket invariant still holds.
            return ContextSnapshot(edit.id, self.doc.revision, 0, [MARK_OPEN + MARK_CLOSE], [MARK_OPEN + MARK_CLOSE])
        start, end = self._region(edit)
        height = self.page_height
        page_index = start // height
        page_start = page_index * height
        page = rendered[page_start : page_start + height]
        open_at = start - page_start
        close_at = min(end, page_start + height - 1) - page_start
        page[open_at] = MARK_OPEN + page[open_at]
        page[close_at] = page[close_at] + MARK_CLOSE
        lo = max(0, start - 2)
        hi = min(len(rendered) - 1, end + 2)
        excerpt = rendered[lo : hi + 1]
        excerpt[start - lo] = MARK_OPEN + excerpt[start - lo]
        excerpt[end - lo] = excerpt[end - lo] + MARK_CLOSE
        return ContextSnapshot(edit.id, self.doc.revision, page_index, page, excerpt)

    def render_context(self, edit_id: str) -> ContextSnapshot:
        """Snapshot for an edit: fresh at its base revision, retained after."""
        edit = self.edits.get(edit_id)
        if edit is None:
            raise UnknownEdit(f"no edit {edit_id!r}")
        if self.doc.revision == edit.base_revision:
            return self._build_snapshot(edit)
        if edit.snapshot is None:
            raise UnknownTarget(f"edit {edit_id!r} has no retained render")
        return edit.snapshot

    # --- review ---

    def _stale_reason(self, edit: SuggestedEdit) -> str | None:
        """Safety net run at accept time, independent of the marking pass."""
        doc = self.doc
        if edit.kind == INSERT:
            parent_id = edit.spec["parent_id"]
            if parent_id != ROOT:
                parent = doc.blocks.get(parent_id)
                if parent is None:
                    return "insert parent deleted"
                if parent.mutated_rev > edit.base_revision:
                    return "insert parent mutated"
            after_id = edit.spec.get("after_id")
            if after_id is not None:
                anchor = doc.blocks.get(after_id)
                if anchor is None or anchor.parent_id != parent_id:
                    return "insert anchor gone"
                if anchor.mutated_rev > edit.base_revision:
                    return "insert anchor mutated"
            applied = self.applied_anchors.get((parent_id, after_id))
            if applied is not None and applied > edit.base_revision:
                return "another insert took this anchor"
            return None
        block = doc.blocks.get(edit.spec["block_id"])
        if block is None:
            return "target deleted"
        if block.mutated_rev > edit.base_revision:
            return "target mutated after base revision"
        if edit.kind == DELETE and doc.child_ids(block.id):
            return "target grew children"
        return None

    def review(self, reviewer_role: str, edit_id: str, decision: str) -> ReviewOutcome:
        """Accept or reject a pending edit.

        Accept applies exactly the proposed transformation (one revision) and
        marks newly conflicting pending edits stale. Reject never touches the
        document. Stale edits can only be re-proposed, never applied.
        """
        if reviewer_role != "author":
            raise NotAuthor("only the author reviews suggestions")
        edit = self.edits.get(edit_id)
        if edit is None:
            raise UnknownEdit(f"no edit {edit_id!r}")
        if decision not in ("accept", "reject"):
            raise UnknownTarget(f"unknown decision {decision!r}")
        if edit.status == STALE:
            raise StaleEdit(f"edit {edit_id} is stale; re-propose against the current revision")
        if edit.status != PENDING:
            raise AlreadyResolved(f"edit {edit_id} already {edit.status}")
        if decision == "reject":
            edit.status = REJECTED
            return ReviewOutcome(applied_revision=None)
        reason = self._stale_reason(edit)
        if reason is not None:
            raise StaleEdit(f"edit {edit_id}: {reason}")
        doc = self.doc
        spec = edit.spec
        if edit.kind == INSERT:
            _, rev = doc.insert_block(
                spec["parent_id"],
                spec.get("after_id"),
                spec["block_kind"],
                spec.get("new_text", ""),
                raw_token=spec.get("raw_token"),
                block_id=spec["new_block_id"],
                order_key=spec.get("order_key"),
            )
            self.applied_anchors[(spec["parent_id"], spec.get("after_id"))] = rev
            mutated: set[str] = set()
        elif edit.kind == REPLACE:
            rev = doc.replace_text(spec["block_id"], spec.get("new_text", ""))
            mutated = {spec["block_id"]}
        elif edit.kind == DELETE:
            rev = doc.delete_block(spec["block_id"])
            mutated = {spec["block_id"]}
        else:
            rev = doc.set_done(spec["block_id"], spec["done"])
            mutated = {spec["block_id"]}
        edit.status = ACCEPTED
        edit.applied_revision = rev
        newly_stale = self.mark_stale_for_mutation(mutated, edit.anchor(), exclude=edit.id)
        return ReviewOutcome(applied_revision=rev, newly_stale=newly_stale)

    def stale_candidates(
        self,
        mutated: set[str],
        anchor: tuple[str, str | None] | None = None,
        exclude: str | None = None,
    ) -> list[str]:
        """Pending edits a mutation would strand. Pure.

        A pending edit goes stale iff its referenced block set intersects the
        mutated set, or it is an insert sharing the exact (parent, anchor)
        pair of an applied insert.
        """
        return [
            other.id
            for other in self.edits.values()
            if other.status == PENDING
            and other.id != exclude
            and ((other.refs() & mutated) or (anchor is not None and other.anchor() == anchor))
        ]

    def mark_stale_for_mutation(
        self,
        mutated: set[str],
        anchor: tuple[str, str | None] | None = None,
        exclude: str | None = None,
    ) -> list[str]:
        """Mark pending edits stale after a canonical mutation.

        Dictated author mutations route through here too, so worker proposals
        can never outlive their targets.
        """
        out = self.stale_candidates(mutated, anchor, exclude)
        for edit_id in out:
            self.edits[edit_id].status = STALE
        return out


def toggle_done(doc: DocumentTree, block_id: str, done: bool) -> int:
    """Author-side done flag flip; counted as a formatting change in metrics."""
    if block_id not in doc.blocks:
        raise UnknownTarget(f"no block {block_id!r}")
    return doc.set_done(block_id, done)


_EVENT_KINDS = frozenset(
    {
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
    }
)


def classify_metrics(events: Iterable) -> MetricsSummary:
    """Workflow statistics from an event-log prefix.

    Counts accepted edits by kind, distinct submissions among them, author
    done-toggles as formatting, and author-role comment messages.
    """
    summary = MetricsSummary()
    submissions: set[str] = set()
    last_seq = 0
    for event in events:
        seq = event.seq if hasattr(event, "seq") else event["seq"]
        kind = event.kind if hasattr(event, "kind") else event["kind"]
        payload = event.payload if hasattr(event, "payload") else event["payload"]
        if not isinstance(seq, int) or seq <= last_seq:
            raise MalformedLog(seq, f"event seq {seq!r} not increasing")
        last_seq = seq
        if kind not in _EVENT_KINDS:
            raise MalformedLog(seq, f"unknown event kind {kind!r}")
        if kind == "edit_reviewed" and payload.get("decision") == "accept":
            edit_kind = payload.get("kind")
            if edit_kind == INSERT:
                summary.insertions += 1
            elif edit_kind == REPLACE:
                summary.replacements += 1
            elif edit_kind == DELETE:
                summary.deletions += 1
            elif edit_kind == FORMAT:
                summary.formatting += 1
            else:
                raise MalformedLog(seq, f"accepted edit with bad kind {edit_kind!r}")
            submissions.add(payload["submission_id"])
        elif kind == "block_dictated" and payload.get("op") == "set_done":
            summary.formatting += 1
        elif kind == "comment_posted" and payload.get("role") == "author":
            summary.author_comments += 1
    summary.submissions = len(submissions)
    return summary
