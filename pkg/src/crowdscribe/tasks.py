"""Randomized, skip-able task allocation with starvation escalation.

Workers pull a uniformly random open task they have not skipped, or claim a
specific one. Skipping returns a task to the pool and permanently excludes
the skipper. A task skipped by every active worker escalates to the author,
who can reopen it with a clean slate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .document import DocumentTree, SECTION
from .errors import AlreadyDone, NotAssignee, UnknownTarget, UnknownTask
from .randomness import SeededSource

OPEN = "open"
ASSIGNED = "assigned"
DONE = "done"
ESCALATED = "escalated"


@dataclass
class Task:
    id: str
    description: str
    target_section: str | None
    state: str = OPEN
    assignee: str | None = None
    skip_set: set[str] = field(default_factory=set)
    created_seq: int = 0

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "description": self.description,
            "target_section": self.target_section,
            "state": self.state,
            "assignee": self.assignee,
            "skip_set": sorted(self.skip_set),
            "created_seq": self.created_seq,
        }


def resolve_section_title(doc: DocumentTree, title: str) -> str:
    for section in doc.sections():
        if section.kind == SECTION and section.text == title:
            return section.id
    raise UnknownTarget(f"no section titled {title!r}")


class TaskBoard:
    """Per-document task pool. Callers serialize mutations."""

    def __init__(self):
        self.tasks: dict[str, Task] = {}
        self._seq = 0

    def _next_id(self) -> str:
        self._seq += 1
        return f"tsk-{self._seq}"

    def seed(
        self,
        doc: DocumentTree | None,
        templates: Iterable[dict],
        created_seq: int = 0,
        task_ids: Iterable[str] | None = None,
    ) -> list[Task]:
        """Create open tasks from templates, resolving section titles to ids."""
        ids = iter(task_ids) if task_ids is not None else None
        out = []
        for template in templates:
            target = template.get("target_section")
            title = template.get("target_section_title")
            if target is None and title is not None:
                if doc is None:
                    raise UnknownTarget("cannot resolve a section title without a document")
                target = resolve_section_title(doc, title)
            elif target is not None and doc is not None and target not in doc.blocks:
                raise UnknownTarget(f"no section {target!r}")
            task = Task(
                id=next(ids) if ids else self._next_id(),
                description=template["description"],
                target_section=target,
                created_seq=created_seq,
            )
            self.tasks[task.id] = task
            out.append(task)
        return out

    def held_by(self, worker_id: str) -> Task | None:
        for task in self.tasks.values():
            if task.state == ASSIGNED and task.assignee == worker_id:
                return task
        return None

    def eligible_for(self, worker_id: str) -> list[Task]:
        pool = [
            t for t in self.tasks.values()
            if t.state == OPEN and worker_id not in t.skip_set
        ]
        pool.sort(key=lambda t: (t.created_seq, t.id))
        return pool

    def next_task(
        self,
        worker_id: str,
        rng: SeededSource,
        claim: str | None = None,
    ) -> Task | None:
        """Assign a uniformly random eligible open task (or a claimed one).

        One task per worker at a time: a worker already holding a task gets
        that task back without consuming randomness. Returns None when no
        eligible task exists.
        """
        held = self.held_by(worker_id)
        if held is not None:
            return held
        pool = self.eligible_for(worker_id)
        if claim is not None:
            pool = [t for t in pool if t.id == claim]
            if not pool:
                return None
            chosen = pool[0]
        else:
            if not pool:
                return None
            chosen = pool[rng.choice_index(len(pool))]
        chosen.state = ASSIGNED
        chosen.assignee = worker_id
        return chosen

    def apply_assignment(self, worker_id: str, task_id: str) -> Task:
        """Replay-side assignment: the chosen task comes from the log."""
        task = self.tasks[task_id]
        task.state = ASSIGNED
        task.assignee = worker_id
        return task

    def skip(self, worker_id: str, task_id: str) -> Task:
        task = self.tasks.get(task_id)
        if task is None:
            raise UnknownTask(f"no task {task_id!r}")
        if task.state != ASSIGNED or task.assignee != worker_id:
            raise NotAssignee(f"task {task_id} is not assigned to {worker_id}")
        task.state = OPEN
        task.assignee = None
        task.skip_set.add(worker_id)
        return task

    def complete(self, worker_id: str, task_id: str) -> Task:
        task = self.tasks.get(task_id)
        if task is None:
            raise UnknownTask(f"no task {task_id!r}")
        if task.state == DONE:
            raise AlreadyDone(f"task {task_id} already done")
        if task.state != ASSIGNED or task.assignee != worker_id:
            raise NotAssignee(f"task {task_id} is not assigned to {worker_id}")
        task.state = DONE
        task.assignee = None
        return task

    def escalate_check(self, active_workers: set[str]) -> list[str]:
        """Escalate every open task whose skip set covers all active workers.

        Follows the superset rule literally: with an empty active set every
        open task escalates. Server flow only calls this from a skip, which
        implies at least one active worker.
        """
        out = []
        for task in sorted(self.tasks.values(), key=lambda t: t.id):
            if task.state == OPEN and task.skip_set >= active_workers:
                task.state = ESCALATED
                task.assignee = None
                out.append(task.id)
        return out

    def reopen(self, task_id: str) -> Task:
        """Author reopens an escalated task with a cleared skip set. Idempotent
        for open/assigned tasks; completing is terminal."""
        task = self.tasks.get(task_id)
        if task is None:
            raise UnknownTask(f"no task {task_id!r}")
        if task.state == DONE:
            raise AlreadyDone(f"task {task_id} already done")
        if task.state == ESCALATED:
            task.state = OPEN
            task.skip_set = set()
        return task
