"""Scripted crowd personas that drive the service end to end, no UI involved.

Transcripts hold concrete, fully-resolved actions. Generators build them by
driving a scratch server and recording what happened; since every id and
random draw is deterministic, re-running a recorded transcript on a fresh
server with the same seed reproduces the identical state digest.

The module also carries an independent brute-force oracle: a naive tree of
ordered child lists, fed directly from the event log, against which the
service's fractional-key tree must agree exactly.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import AUTHOR, WORKER, ServerCore
from .errors import ServiceError
from .suggestions import MetricsSummary, classify_metrics


class UnexpectedError(Exception):
    def __init__(self, action_index: int, code: str, message: str = ""):
        super().__init__(f"action {action_index}: {code} {message}".strip())
        self.action_index = action_index
        self.code = code


@dataclass
class Action:
    virtual_time: int
    actor_id: str
    role: str
    endpoint: str
    payload: dict
    expect_error: str | None = None

    def to_record(self) -> dict:
        rec = {
            "virtual_time": self.virtual_time,
            "actor_id": self.actor_id,
            "role": self.role,
            "endpoint": self.endpoint,
            "payload": self.payload,
        }
        if self.expect_error:
            rec["expect_error"] = self.expect_error
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Action":
        return cls(
            virtual_time=rec["virtual_time"],
            actor_id=rec["actor_id"],
            role=rec["role"],
            endpoint=rec["endpoint"],
            payload=rec["payload"],
            expect_error=rec.get("expect_error"),
        )


@dataclass
class Transcript:
    actors: list[dict]
    seed: int
    actions: list[Action] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def to_jsonl(self) -> str:
        header = {"actors": self.actors, "seed": self.seed, "notes": self.notes}
        lines = [json.dumps(header, ensure_ascii=False)]
        lines += [json.dumps(a.to_record(), ensure_ascii=False) for a in self.actions]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = json.loads(lines[0])
        return cls(
            actors=header["actors"],
            seed=header["seed"],
            notes=header.get("notes", {}),
            actions=[Action.from_record(json.loads(ln)) for ln in lines[1:]],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Transcript":
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


@dataclass
class SimReport:
    final_digest: str
    metrics: MetricsSummary
    errors_encountered: list[tuple[int, str]]
    tasks_outcome: dict
    author_consumed_seqs: list[int]

    def to_record(self) -> dict:
        return {
            "final_digest": self.final_digest,
            "metrics": self.metrics.to_record(),
            "errors_encountered": [list(e) for e in self.errors_encountered],
            "tasks_outcome": dict(self.tasks_outcome),
            "author_consumed_seqs": list(self.author_consumed_seqs),
        }


class _SessionPool:
    """Lazy session issuance in first-action order, mirrored by generators."""

    def __init__(self, server: ServerCore, actors: list[dict]):
        self.server = server
        self.roles = {a["actor_id"]: a["role"] for a in actors}
        self.tokens: dict[str, str] = {}
        self.doc_id: str | None = None

    def token_for(self, actor_id: str) -> str:
        token = self.tokens.get(actor_id)
        if token is None:
            role = self.roles[actor_id]
            doc_id = self.doc_id if role == WORKER else None
            session = self.server.create_session(actor_id, role, doc_id)
            token = session.token
            self.tokens[actor_id] = token
        return token


def run_transcript(server: ServerCore, transcript: Transcript, concurrent_ticks: bool = False) -> SimReport:
    """Issue a transcript's actions against a fresh server and report.

    Actions run in virtual-time order, ties broken by list order (or, with
    concurrent_ticks, same-tick actions run from separate threads to exercise
    the server's serialization). Errors not declared by the transcript abort
    the run.
    """
    if server.events:
        raise ValueError("run_transcript needs a fresh server")
    if server.rng.seed != transcript.seed:
        raise ValueError("server seed does not match the transcript")
    pool = _SessionPool(server, transcript.actors)
    ordered = sorted(enumerate(transcript.actions), key=lambda p: (p[1].virtual_time, p[0]))
    errors: list[tuple[int, str]] = []
    author_consumed: list[int] = []

    def issue(index: int, action: Action) -> None:
        token = pool.token_for(action.actor_id)
        try:
            result = server.handle(action.endpoint, token, copy.deepcopy(action.payload))
        except ServiceError as exc:
            if action.expect_error == exc.code:
                errors.append((index, exc.code))
                return
            raise UnexpectedError(index, exc.code, exc.message) from exc
        if action.expect_error:
            raise UnexpectedError(index, "no_error", f"expected {action.expect_error}")
        if action.endpoint == "create_document":
            pool.doc_id = result["doc_id"]
        if action.endpoint == "poll_events" and action.role == AUTHOR:
            author_consumed.extend(e["seq"] for e in result["events"])

    if not concurrent_ticks:
        for index, action in ordered:
            issue(index, action)
    else:
        import threading

        i = 0
        while i < len(ordered):
            tick = ordered[i][1].virtual_time
            group = []
            while i < len(ordered) and ordered[i][1].virtual_time == tick:
                group.append(ordered[i])
                i += 1
            if len(group) == 1:
                issue(*group[0])
                continue
            # Sessions must exist before threads race on first use.
            for _, action in group:
                pool.token_for(action.actor_id)
            failures: list[BaseException] = []

            def run_one(pair):
                try:
                    issue(*pair)
                except BaseException as exc:  # noqa: BLE001
                    failures.append(exc)

            threads = [threading.Thread(target=run_one, args=(pair,)) for pair in group]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            if failures:
                raise failures[0]

    doc_ids = sorted(server.docs)
    metrics = MetricsSummary()
    if doc_ids:
        doc_events = [e for e in server.events if e.doc_id == doc_ids[0]]
        metrics = classify_metrics(doc_events)
    outcome: dict[str, int] = {}
    for board in server.boards.values():
        for task in board.tasks.values():
            outcome[task.state] = outcome.get(task.state, 0) + 1
    return SimReport(
        final_digest=server.state_digest(),
        metrics=metrics,
        errors_encountered=errors,
        tasks_outcome=outcome,
        author_consumed_seqs=author_consumed,
    )


# --- independent brute-force oracle ---

def oracle_shape(events) -> dict:
    """Naive reconstruction of the final trees straight from the event log.

    Ordered child lists, plain list insertion, no order keys, no service
    code paths beyond the event records themselves.
    """
    docs: dict[str, dict] = {}

    def insert(doc, block_id, parent_id, after_id, kind, text):
        doc["blocks"][block_id] = {"kind": kind, "text": text, "done": False}
        siblings = doc["children"].setdefault(parent_id, [])
        pos = 0 if after_id is None else siblings.index(after_id) + 1
        siblings.insert(pos, block_id)
        doc["children"].setdefault(block_id, [])

    for event in events:
        kind, payload = event.kind, event.payload
        if kind == "doc_created":
            doc = {"blocks": {}, "children": {"": []}, "revision": 0}
            docs[payload["doc_id"]] = doc
            section = None
            n = 0
            for line in payload["seed_outline"].splitlines():
                line = line.strip()
                if not line:
                    continue
                n += 1
                bid = f"blk-{n}"
                if line.startswith("# "):
                    insert_at_end(doc, bid, "", "section", line[2:].strip())
                    section = bid
                else:
                    insert_at_end(doc, bid, section, "bullet", line[2:].strip())
        elif kind == "block_dictated":
            doc = docs[event.doc_id]
            doc["revision"] += 1
            if payload["op"] == "insert":
                insert(doc, payload["block_id"], payload["parent_id"], payload.get("after_id"), payload["kind"], payload.get("text", ""))
            else:
                doc["blocks"][payload["block_id"]]["done"] = payload["done"]
        elif kind == "edit_proposed":
            docs[event.doc_id].setdefault("specs", {})[payload["edit_id"]] = payload["spec"]
        elif kind == "edit_reviewed" and payload["decision"] == "accept":
            doc = docs[event.doc_id]
            doc["revision"] += 1
            spec = doc["specs"][payload["edit_id"]]
            if spec["kind"] == "insert":
                insert(doc, spec["new_block_id"], spec["parent_id"], spec.get("after_id"), spec["block_kind"], spec.get("new_text", ""))
            elif spec["kind"] == "replace":
                doc["blocks"][spec["block_id"]]["text"] = spec.get("new_text", "")
            elif spec["kind"] == "delete":
                block_id = spec["block_id"]
                del doc["blocks"][block_id]
                for siblings in doc["children"].values():
                    if block_id in siblings:
                        siblings.remove(block_id)
                        break
                doc["children"].pop(block_id, None)
            else:
                doc["blocks"][spec["block_id"]]["done"] = spec["done"]
    out = {}
    for doc_id, doc in docs.items():
        out[doc_id] = {
            "revision": doc["revision"],
            "tree": _ordered_shape(doc, ""),
        }
    return out


def insert_at_end(doc, block_id, parent_id, kind, text):
    doc["blocks"][block_id] = {"kind": kind, "text": text, "done": False}
    doc["children"].setdefault(parent_id, []).append(block_id)
    doc["children"].setdefault(block_id, [])


def _ordered_shape(doc, parent_id):
    out = []
    for bid in doc["children"].get(parent_id, []):
        b = doc["blocks"][bid]
        out.append({
            "id": bid,
            "kind": b["kind"],
            "text": b["text"],
            "done": b["done"],
            "children": _ordered_shape(doc, bid),
        })
    return out


def server_shape(core: ServerCore) -> dict:
    """The service's trees in the oracle's shape, for direct comparison."""
    out = {}
    for doc_id, doc in core.docs.items():
        def walk(parent_id):
            return [
                {
                    "id": b.id,
                    "kind": b.kind,
                    "text": b.text,
                    "done": b.done,
                    "children": walk(b.id),
                }
                for b in doc.children(parent_id)
            ]

        out[doc_id] = {"revision": doc.revision, "tree": walk("")}
    return out


# --- persona generators ---

def gen_expand_bullets_worker(persona_seed: int, doc_view: dict, task: dict) -> list[Action]:
    """Actions for one worker turning a section's bullets into paragraphs.

    Per bullet: an insert proposing a templated paragraph right after it and
    a format edit marking the bullet done, all under one submission; then the
    task is completed. A task whose section has no bullets is skipped.
    """
    worker_id = f"w{persona_seed % 1000}"
    section_id = task["target_section"]
    bullets = [
        b for b in doc_view["blocks"]
        if b["kind"] == "bullet" and b["parent_id"] == section_id
    ]
    tick = 0
    if not bullets:
        return [Action(tick, worker_id, WORKER, "skip_task", {"task_id": task["id"]})]
    submission = f"{worker_id}-task-{task['id']}"
    actions = []
    for bullet in bullets:
        text = f"{bullet['text']}, developed into full prose for the draft."
        actions.append(Action(tick, worker_id, WORKER, "propose_edit", {
            "doc_id": doc_view["doc_id"],
            "submission_id": submission,
            "spec": {
                "kind": "insert",
                "parent_id": section_id,
                "after_id": bullet["id"],
                "block_kind": "paragraph",
                "new_text": text,
            },
        }))
        actions.append(Action(tick, worker_id, WORKER, "propose_edit", {
            "doc_id": doc_view["doc_id"],
            "submission_id": submission,
            "spec": {"kind": "format", "block_id": bullet["id"], "done": True},
        }))
        tick += 1
    actions.append(Action(tick, worker_id, WORKER, "complete_task", {"task_id": task["id"]}))
    return actions


# --- the full-paper reference fixture ---

FIXTURE_SEED = 20160101

_SECTIONS = [
    ("Title", 2),
    ("Abstract", 2),
    ("Introduction", 4),
    ("Background", 3),
    ("Approach", 4),
    ("System Design", 4),
    ("Implementation", 3),
    ("Evaluation", 3),
    ("Results", 3),
    ("Discussion", 3),
    ("Limitations", 2),
    ("Conclusion", 3),
]

_TASK_NOTES = [
    "Develop the bullet points in the 'Introduction' section into paragraphs",
    "Check that each note in 'Background' names the source it came from",
    "Draft the 'Abstract' once other sections have text",
    "Tighten the wording across the 'Approach' section",
    "Expand the 'System Design' notes into prose",
    "Fill in concrete details under 'Implementation'",
    "Write up the 'Evaluation' plan as full sentences",
    "Summarize the findings under 'Results'",
    "Balance the 'Discussion' against the stated limitations",
    "Draft a closing paragraph for 'Conclusion'",
    "Proofread the whole draft for voice and tense",
]

EXPECTED_PAPER_SCALE = {
    "submissions": 95,
    "insertions": 117,
    "replacements": 170,
    "deletions": 107,
    "formatting": 48,
    "author_comments": 68,
}


def fixture_outline() -> str:
    lines = []
    for title, n_bullets in _SECTIONS:
        lines.append(f"# {title}")
        for i in range(n_bullets):
            lines.append(f"- {title.lower()} note {i + 1}")
    return "\n".join(lines) + "\n"


class _Recorder:
    """Drives a scratch server and records every action it takes."""

    def __init__(self, seed: int, actors: list[dict]):
        self.server = ServerCore(rng_seed=seed)
        self.pool = _SessionPool(self.server, actors)
        self.actions: list[Action] = []
        self.tick = 0

    def do(self, actor_id: str, endpoint: str, payload: dict, bump: bool = True) -> dict:
        role = self.pool.roles[actor_id]
        self.actions.append(Action(self.tick, actor_id, role, endpoint, copy.deepcopy(payload)))
        if bump:
            self.tick += 1
        result = self.server.handle(endpoint, self.pool.token_for(actor_id), payload)
        if endpoint == "create_document":
            self.pool.doc_id = result["doc_id"]
        return result


def _plan_submissions() -> list[list[str]]:
    """Split the four edit-kind quotas into exactly 95 submissions.

    Sizes: 62 submissions of five edits, 33 of four (62*5 + 33*4 = 442).
    Each pick takes the kind with the most quota left; deletes only run once
    enough accepted inserts exist to target.
    """
    quotas = {"insert": 117, "replace": 170, "delete": 107, "format": 48}
    sizes = [5] * 62 + [4] * 33
    paragraphs_live = 0
    plan = []
    for size in sizes:
        ops = []
        inserts_here = 0
        deletes_here = 0
        for _ in range(size):
            order = sorted(quotas, key=lambda k: -quotas[k])
            for kind in order:
                if quotas[kind] == 0:
                    continue
                if kind == "delete" and deletes_here + 1 > paragraphs_live:
                    continue  # not enough accepted paragraphs yet
                if kind == "format" and sum(1 for o in ops if o == "format") >= 3:
                    continue  # spread toggles out
                ops.append(kind)
                quotas[kind] -= 1
                if kind == "insert":
                    inserts_here += 1
                if kind == "delete":
                    deletes_here += 1
                break
        plan.append(ops)
        paragraphs_live += inserts_here - deletes_here
    assert all(v == 0 for v in quotas.values()), quotas
    assert sum(len(p) for p in plan) == 442
    return plan


def fixture_paper_scale(seed: int = FIXTURE_SEED) -> Transcript:
    """Five scripted workers and one author reproduce the reference workflow
    statistics exactly: 95 submissions whose accepted edits total 117 inserts,
    170 replacements, 107 deletions and 48 format changes, with 68 author
    comment messages, on a seed outline of 12 sections and 36 bullets.
    """
    workers = [f"w{i}" for i in range(1, 6)]
    actors = [{"actor_id": "author", "role": AUTHOR}] + [
        {"actor_id": w, "role": WORKER} for w in workers
    ]
    rec = _Recorder(seed, actors)
    templates = [{"description": d} for d in _TASK_NOTES]
    doc = rec.do("author", "create_document", {
        "seed_outline": fixture_outline(),
        "task_templates": templates,
    })
    doc_id = doc["doc_id"]

    view = rec.server.handle("get_document", rec.pool.token_for("author"), {"doc_id": doc_id})
    sections = [b["id"] for b in view["blocks"] if b["kind"] == "section"]
    seed_bullets = [b["id"] for b in view["blocks"] if b["kind"] == "bullet"]

    cursor = 0

    def author_poll_and_review():
        nonlocal cursor
        result = rec.do("author", "poll_events", {"doc_id": doc_id, "since": cursor})
        events = result["events"]
        if events:
            cursor = max(e["seq"] for e in events)
        for event in events:
            if event["kind"] == "edit_proposed":
                rec.do("author", "review_edit", {
                    "edit_id": event["payload"]["edit_id"], "decision": "accept",
                })
        return events

    # Workers pick up their first tasks before writing anything.
    held: dict[str, str] = {}
    for w in workers:
        task = rec.do(w, "next_task", {"doc_id": doc_id})["task"]
        held[w] = task["id"]

    plan = _plan_submissions()
    paragraph_pool: list[str] = []   # accepted inserted paragraphs, deletable
    replace_ring = 0
    format_ring = 0
    insert_ring = 0
    author_thread_openings = 0

    for sub_index, ops in enumerate(plan):
        worker = workers[sub_index % 5]
        submission = f"sub-{sub_index + 1:03d}"
        used_targets: set[str] = set()
        used_anchors: set[tuple] = set()
        inserted_this_sub: list[str] = []
        deleted_this_sub: list[str] = []

        for op in ops:
            if op == "insert":
                section = sections[insert_ring % len(sections)]
                insert_ring += 1
                anchor = (section, None)
                if anchor in used_anchors:
                    section = sections[insert_ring % len(sections)]
                    insert_ring += 1
                    anchor = (section, None)
                used_anchors.add(anchor)
                out = rec.do(worker, "propose_edit", {
                    "doc_id": doc_id,
                    "submission_id": submission,
                    "spec": {
                        "kind": "insert", "parent_id": section, "after_id": None,
                        "block_kind": "paragraph",
                        "new_text": f"Draft paragraph {sub_index + 1} adding detail to the outline.",
                    },
                }, bump=False)
                proposed = rec.server.books[doc_id].edits[out["edit_id"]]
                inserted_this_sub.append(proposed.spec["new_block_id"])
            elif op == "replace":
                candidates = seed_bullets + sections + paragraph_pool
                target = None
                while target is None or target in used_targets:
                    target = candidates[replace_ring % len(candidates)]
                    replace_ring += 1
                used_targets.add(target)
                rec.do(worker, "propose_edit", {
                    "doc_id": doc_id,
                    "submission_id": submission,
                    "spec": {"kind": "replace", "block_id": target,
                             "new_text": f"Reworded content from submission {sub_index + 1}."},
                }, bump=False)
            elif op == "format":
                target = None
                while target is None or target in used_targets:
                    target = seed_bullets[format_ring % len(seed_bullets)]
                    format_ring += 1
                used_targets.add(target)
                rec.do(worker, "propose_edit", {
                    "doc_id": doc_id,
                    "submission_id": submission,
                    "spec": {"kind": "format", "block_id": target, "done": True},
                }, bump=False)
            else:  # delete an inserted paragraph from an earlier submission
                target = next(t for t in paragraph_pool if t not in used_targets)
                used_targets.add(target)
                deleted_this_sub.append(target)
                rec.do(worker, "propose_edit", {
                    "doc_id": doc_id,
                    "submission_id": submission,
                    "spec": {"kind": "delete", "block_id": target},
                }, bump=False)

        rec.tick += 1

        # The first 48 submissions each raise one clarification thread; the
        # author answers every one after reviewing (48 replies). Worker
        # questions do not count toward the author-message total.
        thread_id = None
        if sub_index < 48:
            anchor = seed_bullets[sub_index % len(seed_bullets)]
            thread_id = rec.do(worker, "open_thread", {
                "doc_id": doc_id, "anchor": anchor,
                "text": f"Question about submission {submission}: is this the intended direction?",
            })["thread_id"]

        author_poll_and_review()
        for block_id in deleted_this_sub:
            paragraph_pool.remove(block_id)
        paragraph_pool.extend(inserted_this_sub)

        if thread_id is not None:
            rec.do("author", "reply_thread", {
                "thread_id": thread_id,
                "text": f"Answer for {submission}: yes, keep going.",
                "raw_token": f"dictation-{sub_index + 1:03d}",
            })

        # Twenty author-opened instruction threads, spread over the run.
        if sub_index % 4 == 2 and author_thread_openings < 20:
            author_thread_openings += 1
            rec.do("author", "open_thread", {
                "doc_id": doc_id,
                "anchor": seed_bullets[(author_thread_openings * 3) % len(seed_bullets)],
                "text": f"Instruction {author_thread_openings}: keep terminology consistent.",
                "raw_token": f"dictation-open-{author_thread_openings:02d}",
            })

        # Mid-run, each worker closes out its task and draws another.
        if sub_index == 47:
            for w in workers:
                rec.do(w, "complete_task", {"task_id": held[w]})
                task = rec.do(w, "next_task", {"doc_id": doc_id})["task"]
                held[w] = task["id"]

    # Wind down the tasks: finish held ones, then starve the leftover task
    # so it escalates, gets reopened, and is finally claimed and completed.
    for w in workers:
        rec.do(w, "complete_task", {"task_id": held[w]})
    board = rec.server.boards[doc_id]
    leftover = [t.id for t in board.tasks.values() if t.state == "open"]
    assert len(leftover) == 1
    target_task = leftover[0]
    for w in workers:
        got = rec.do(w, "next_task", {"doc_id": doc_id, "claim": target_task})["task"]
        assert got and got["id"] == target_task
        rec.do(w, "skip_task", {"task_id": target_task})
    author_poll_and_review()  # consumes the task_escalated event
    rec.do("author", "reopen_task", {"task_id": target_task})
    got = rec.do(workers[0], "next_task", {"doc_id": doc_id, "claim": target_task})["task"]
    assert got and got["id"] == target_task
    rec.do(workers[0], "complete_task", {"task_id": target_task})
    author_poll_and_review()  # drains anything left for the author

    metrics = classify_metrics([e for e in rec.server.events if e.doc_id == doc_id])
    assert metrics.to_record() == EXPECTED_PAPER_SCALE, metrics.to_record()
    assert not rec.server.books[doc_id].pending()
    assert all(t.state == "done" for t in board.tasks.values())

    return Transcript(
        actors=actors,
        seed=seed,
        actions=rec.actions,
        notes={
            "comment_split": (
                "68 author messages = 20 thread openings + 48 replies to worker "
                "questions; the split between new instructions and answers is an "
                "arbitrary choice, fixed here"
            ),
            "outline": "12 sections, 36 bullets",
        },
    )
