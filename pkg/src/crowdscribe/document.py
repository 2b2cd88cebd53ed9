"""Structured document tree: sections, paragraphs, and bullets.

The tree is the canonical document. Only dictations and accepted suggestions
mutate it; every mutation bumps ``revision`` by exactly one. Sibling order is
the lexicographic order of fractional order keys, so inserts never renumber.
"""

from __future__ import annotations

import bisect
import json
import textwrap
from dataclasses import dataclass, field

from .errors import (
    KeyOrderViolation,
    KindMismatch,
    MalformedOutline,
    UnknownAnchor,
    UnknownParent,
)
from .orderkeys import order_key_between

ROOT = ""  # parent sentinel for sections

SECTION = "section"
PARAGRAPH = "paragraph"
BULLET = "bullet"
KINDS = (SECTION, PARAGRAPH, BULLET)

# Kinds a parent accepts: sections sit under the root, content under sections.
_CHILD_KINDS = {ROOT: (SECTION,), SECTION: (PARAGRAPH, BULLET)}

WRAP_WIDTH = 80
DEFAULT_PAGE_HEIGHT = 40


@dataclass
class Block:
    id: str
    kind: str
    parent_id: str
    order_key: str
    text: str
    done: bool = False
    raw_token: str | None = None
    mutated_rev: int = 0  # revision of the last content mutation (or creation)

    def to_record(self) -> dict:
        rec = {
            "id": self.id,
            "kind": self.kind,
            "parent_id": self.parent_id,
            "order_key": self.order_key,
            "text": self.text,
            "done": self.done,
        }
        if self.raw_token is not None:
            rec["raw_token"] = self.raw_token
        return rec


@dataclass
class Page:
    index: int
    lines: list[str]
    block_ids: list[str] = field(default_factory=list)


@dataclass
class RenderedLine:
    text: str
    block_id: str
    starts_block: bool


class DocumentTree:
    """Rooted block tree with a monotonically increasing revision."""

    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        self.revision = 0
        self.blocks: dict[str, Block] = {}
        self._children: dict[str, list[str]] = {ROOT: []}
        self._auto_id = 0

    # --- structure helpers ---

    def children(self, parent_id: str) -> list[Block]:
        return [self.blocks[bid] for bid in self._children.get(parent_id, [])]

    def child_ids(self, parent_id: str) -> list[str]:
        return list(self._children.get(parent_id, []))

    def sections(self) -> list[Block]:
        return self.children(ROOT)

    def _sibling_keys(self, parent_id: str) -> list[str]:
        return [self.blocks[bid].order_key for bid in self._children.get(parent_id, [])]

    def _place(self, block: Block) -> None:
        siblings = self._children.setdefault(block.parent_id, [])
        keys = [self.blocks[bid].order_key for bid in siblings]
        siblings.insert(bisect.bisect_left(keys, block.order_key), block.id)

    def key_between_siblings(self, parent_id: str, after_id: str | None) -> str:
        """Order key for a new child placed right after ``after_id`` (or first)."""
        siblings = self._children.get(parent_id, [])
        keys = self._sibling_keys(parent_id)
        if after_id is None:
            lo = None
            hi = keys[0] if keys else None
        else:
            pos = siblings.index(after_id)
            lo = keys[pos]
            hi = keys[pos + 1] if pos + 1 < len(keys) else None
        return order_key_between(lo, hi)

    # --- mutations (single-owner; the orchestrator serializes callers) ---

    def check_insert(self, parent_id: str, after_id: str | None, kind: str) -> None:
        """Pure validation of an insert's placement; raises, never mutates."""
        if parent_id != ROOT and parent_id not in self.blocks:
            raise UnknownParent(f"no block {parent_id!r}")
        parent_kind = ROOT if parent_id == ROOT else self.blocks[parent_id].kind
        allowed = _CHILD_KINDS.get(parent_kind, ())
        if kind not in KINDS:
            raise KindMismatch(f"unknown block kind {kind!r}")
        if kind not in allowed:
            raise KindMismatch(f"{kind} not allowed under {parent_kind or 'root'}")
        if after_id is not None:
            anchor = self.blocks.get(after_id)
            if anchor is None or anchor.parent_id != parent_id:
                raise UnknownAnchor(f"no sibling {after_id!r} under {parent_id!r}")

    def peek_auto_block_id(self) -> str:
        """Id the next auto-allocating insert will use, without allocating."""
        n = self._auto_id
        while True:
            n += 1
            candidate = f"blk-{n}"
            if candidate not in self.blocks:
                return candidate

    def insert_block(
        self,
        parent_id: str,
        after_id: str | None,
        kind: str,
        text: str,
        raw_token: str | None = None,
        block_id: str | None = None,
        order_key: str | None = None,
    ) -> tuple[str, int]:
        """Insert a block after ``after_id`` among ``parent_id``'s children.

        Returns (new block id, new revision). ``block_id`` and ``order_key``
        may be supplied by callers that pre-allocate them (accepted insert
        suggestions fix both at proposal time, so accept order cannot change
        the resulting bytes).
        """
        self.check_insert(parent_id, after_id, kind)
        if block_id is None:
            while True:
                self._auto_id += 1
                block_id = f"blk-{self._auto_id}"
                if block_id not in self.blocks:
                    break
        if order_key is None:
            key = self.key_between_siblings(parent_id, after_id)
        else:
            key = order_key
            if any(self.blocks[s].order_key == key for s in self._children.get(parent_id, [])):
                raise KeyOrderViolation(f"sibling already holds order key {key!r}")
        self.revision += 1
        block = Block(
            id=block_id,
            kind=kind,
            parent_id=parent_id,
            order_key=key,
            text=text,
            raw_token=raw_token,
            mutated_rev=self.revision,
        )
        self.blocks[block_id] = block
        self._place(block)
        return block_id, self.revision

    def replace_text(self, block_id: str, text: str) -> int:
        block = self.blocks[block_id]
        self.revision += 1
        block.text = text
        block.mutated_rev = self.revision
        return self.revision

    def delete_block(self, block_id: str) -> int:
        block = self.blocks[block_id]
        if self._children.get(block_id):
            raise KindMismatch(f"cannot delete {block_id!r}: it has children")
        self.revision += 1
        self._children.get(block.parent_id, []).remove(block_id)
        self._children.pop(block_id, None)
        del self.blocks[block_id]
        return self.revision

    def set_done(self, block_id: str, done: bool) -> int:
        block = self.blocks[block_id]
        if block.kind != BULLET:
            raise KindMismatch(f"done flag applies to bullets, not {block.kind}")
        self.revision += 1
        block.done = done
        block.mutated_rev = self.revision
        return self.revision

    # --- validation (used by tests after every mutation) ---

    def validate(self) -> None:
        seen_children: dict[str, list[str]] = {}
        for bid, block in self.blocks.items():
            assert block.id == bid
            if block.parent_id != ROOT:
                parent = self.blocks.get(block.parent_id)
                assert parent is not None, f"{bid} parented to missing block"
                assert block.kind in _CHILD_KINDS[parent.kind], f"{bid} kind misplaced"
            else:
                assert block.kind == SECTION, f"{bid} at root must be a section"
            if block.kind != BULLET:
                assert block.done is False, f"{bid} done on non-bullet"
            seen_children.setdefault(block.parent_id, []).append(bid)
        for parent_id, ids in self._children.items():
            assert sorted(ids) == sorted(seen_children.get(parent_id, [])), (
                f"child index out of sync under {parent_id!r}"
            )
            keys = [self.blocks[b].order_key for b in ids]
            assert keys == sorted(keys), f"children of {parent_id!r} not key-ordered"
            assert len(set(keys)) == len(keys), f"duplicate keys under {parent_id!r}"
        assert self.revision >= 0
        # Reachability from the root sentinel (tree, not forest).
        reachable: set[str] = set()
        stack = [ROOT]
        while stack:
            for bid in self._children.get(stack.pop(), []):
                reachable.add(bid)
                stack.append(bid)
        assert reachable == set(self.blocks), "unreachable blocks present"


# --- seed outline ---

def parse_seed_outline(text: str, doc_id: str = "doc-1") -> DocumentTree:
    """Build a revision-0 tree from the line-oriented seed grammar.

    "# Title" opens a section; "- text" appends a bullet to the section that
    most recently opened; blank lines are ignored; anything else is malformed.
    """
    doc = DocumentTree(doc_id)
    current_section: str | None = None

    def add(kind: str, parent_id: str, text: str) -> str:
        doc._auto_id += 1
        bid = f"blk-{doc._auto_id}"
        kids = doc.child_ids(parent_id)
        key = doc.key_between_siblings(parent_id, kids[-1] if kids else None)
        block = Block(bid, kind, parent_id, key, text, mutated_rev=0)
        doc.blocks[bid] = block
        doc._place(block)
        return bid

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# "):
            current_section = add(SECTION, ROOT, line[2:].strip())
        elif line.startswith("- "):
            if current_section is None:
                raise MalformedOutline(line_no, f"bullet before any heading at line {line_no}")
            add(BULLET, current_section, line[2:].strip())
        else:
            raise MalformedOutline(line_no, f"unrecognized outline line {line_no}: {raw!r}")
    return doc


# --- rendering ---

def render_lines(doc: DocumentTree) -> list[RenderedLine]:
    """Deterministic line-by-line rendering with block attribution."""
    out: list[RenderedLine] = []
    for section in doc.sections():
        title = section.text
        out.append(RenderedLine(title, section.id, True))
        out.append(RenderedLine("-" * max(1, len(title)), section.id, False))
        for child in doc.children(section.id):
            if child.kind == BULLET:
                body = f"~~{child.text}~~" if child.done else child.text
                out.append(RenderedLine(f"- {body}", child.id, True))
            else:
                wrapped = textwrap.wrap(child.text, width=WRAP_WIDTH) or [""]
                for i, seg in enumerate(wrapped):
                    out.append(RenderedLine(seg, child.id, i == 0))
    return out


def render_canonical(doc: DocumentTree) -> str:
    """Pure function of (blocks, revision): same tree, same bytes."""
    return "\n".join(line.text for line in render_lines(doc))


def block_line_span(doc: DocumentTree, block_id: str) -> tuple[int, int]:
    """(first, last) rendered line indexes of a block, inclusive."""
    lines = render_lines(doc)
    rows = [i for i, line in enumerate(lines) if line.block_id == block_id]
    if not rows:
        raise UnknownAnchor(f"block {block_id!r} renders no lines")
    return rows[0], rows[-1]


def paginate(rendered: str, page_height: int) -> list[Page]:
    """Split rendered text into consecutive pages of at most page_height lines."""
    if page_height < 1:
        raise ValueError("page_height must be >= 1")
    if rendered == "":
        return []
    lines = rendered.split("\n")
    return [
        Page(index=i, lines=lines[start : start + page_height])
        for i, start in enumerate(range(0, len(lines), page_height))
    ]


def document_pages(doc: DocumentTree, page_height: int = DEFAULT_PAGE_HEIGHT) -> list[Page]:
    """Pages with block attribution: ids of blocks whose rendering starts there."""
    rendered = render_lines(doc)
    pages = paginate("\n".join(line.text for line in rendered), page_height)
    for page in pages:
        start = page.index * page_height
        page.block_ids = [
            line.block_id
            for line in rendered[start : start + page_height]
            if line.starts_block
        ]
    return pages


# --- interchange ---

def to_structured(doc: DocumentTree) -> dict:
    blocks = sorted(doc.blocks.values(), key=lambda b: (b.parent_id, b.order_key))
    return {
        "doc_id": doc.doc_id,
        "revision": doc.revision,
        "blocks": [b.to_record() for b in blocks],
    }


def canonical_json(obj) -> bytes:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")


def export(doc: DocumentTree, format: str = "structured") -> bytes:
    if format == "plain":
        return render_canonical(doc).encode("utf-8")
    if format == "structured":
        return canonical_json(to_structured(doc))
    raise ValueError(f"unknown export format {format!r}")


def import_structured(data: bytes | str | dict) -> DocumentTree:
    """Inverse of export(structured); preserves ids, keys, and revision."""
    if isinstance(data, (bytes, str)):
        data = json.loads(data)
    doc = DocumentTree(data["doc_id"])
    doc.revision = data["revision"]
    for rec in data["blocks"]:
        block = Block(
            id=rec["id"],
            kind=rec["kind"],
            parent_id=rec["parent_id"],
            order_key=rec["order_key"],
            text=rec["text"],
            done=rec.get("done", False),
            raw_token=rec.get("raw_token"),
        )
        doc.blocks[block.id] = block
    for block in doc.blocks.values():
        doc._children.setdefault(block.id, [])
        doc._children.setdefault(block.parent_id, []).append(block.id)
    for ids in doc._children.values():
        ids.sort(key=lambda bid: doc.blocks[bid].order_key)
    for bid in doc.blocks:
        head, _, tail = bid.partition("-")
        if head == "blk" and tail.isdigit():
            doc._auto_id = max(doc._auto_id, int(tail))
    return doc
