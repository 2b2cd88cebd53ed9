"""Task allocation: random draws, skips, escalation, mutual exclusion."""

import threading

import pytest

from crowdscribe.document import parse_seed_outline
from crowdscribe.errors import AlreadyDone, NotAssignee, UnknownTarget, UnknownTask
from crowdscribe.randomness import SeededSource
from crowdscribe.tasks import ASSIGNED, DONE, ESCALATED, OPEN, TaskBoard

# Critical value for chi-square, df=3, significance 0.01.
CHI2_DF3_P01 = 11.345


def simple_board(n=3):
    board = TaskBoard()
    board.seed(None, [{"description": f"task {i}"} for i in range(n)])
    return board


def test_seed_two_templates():
    board = TaskBoard()
    tasks = board.seed(None, [{"description": "a"}, {"description": "b"}])
    assert len(tasks) == 2
    assert all(t.state == OPEN and t.skip_set == set() for t in tasks)


def test_seed_resolves_section_title():
    doc = parse_seed_outline("# Opening\n- x\n# Closing\n- y\n")
    board = TaskBoard()
    tasks = board.seed(doc, [{"description": "flesh out the opening", "target_section_title": "Opening"}])
    assert tasks[0].target_section == doc.sections()[0].id


def test_seed_unknown_title():
    doc = parse_seed_outline("# Opening\n")
    board = TaskBoard()
    with pytest.raises(UnknownTarget):
        board.seed(doc, [{"description": "x", "target_section_title": "Missing"}])


def test_seed_empty():
    assert TaskBoard().seed(None, []) == []


def test_next_task_single_eligible():
    board = simple_board(1)
    task = board.next_task("w1", SeededSource(1))
    assert task is not None and task.state == ASSIGNED and task.assignee == "w1"


def test_next_task_none_when_all_skipped():
    board = simple_board(2)
    rng = SeededSource(1)
    for _ in range(2):
        task = board.next_task("w1", rng)
        board.skip("w1", task.id)
    assert board.next_task("w1", rng) is None


def test_next_task_excludes_own_skips():
    board = simple_board(5)
    rng = SeededSource(2)
    skipped = set()
    for _ in range(3):
        task = board.next_task("w1", rng)
        board.skip("w1", task.id)
        skipped.add(task.id)
    for _ in range(50):
        task = board.next_task("w1", rng)
        if task is None:
            break
        assert task.id not in skipped
        task.state = OPEN
        task.assignee = None


def test_next_task_held_task_returned_unchanged():
    board = simple_board(3)
    rng = SeededSource(3)
    first = board.next_task("w1", rng)
    draws_after = rng.draws
    again = board.next_task("w1", rng)
    assert again.id == first.id
    assert rng.draws == draws_after  # no randomness consumed


def test_claim_specific_task():
    board = simple_board(3)
    rng = SeededSource(4)
    target = sorted(board.tasks)[2]
    task = board.next_task("w1", rng, claim=target)
    assert task.id == target and task.assignee == "w1"
    assert rng.draws == 0


def test_claim_ineligible_returns_none():
    board = simple_board(2)
    rng = SeededSource(4)
    t = board.next_task("w1", rng)
    board.skip("w1", t.id)
    assert board.next_task("w1", rng, claim=t.id) is None
    assert board.next_task("w1", rng, claim="ghost") is None


def test_uniform_choice_chi_square():
    # 10,000 seeded draws over 4 equal candidates, assignment rolled back
    # between draws; frequencies must pass chi-square at significance 0.01.
    board = simple_board(4)
    rng = SeededSource(20260808)
    counts = {tid: 0 for tid in board.tasks}
    for _ in range(10_000):
        task = board.next_task("w1", rng)
        counts[task.id] += 1
        task.state = OPEN
        task.assignee = None
    expected = 10_000 / 4
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < CHI2_DF3_P01, counts


def test_skip_returns_to_open_and_records():
    board = simple_board(1)
    task = board.next_task("w1", SeededSource(5))
    board.skip("w1", task.id)
    assert task.state == OPEN and task.assignee is None and task.skip_set == {"w1"}


def test_skip_wrong_worker():
    board = simple_board(1)
    task = board.next_task("w1", SeededSource(5))
    with pytest.raises(NotAssignee):
        board.skip("w2", task.id)
    with pytest.raises(UnknownTask):
        board.skip("w1", "ghost")


def test_skip_set_never_shrinks():
    board = simple_board(1)
    rng = SeededSource(6)
    for worker in ("w1", "w2", "w3"):
        task = board.next_task(worker, rng)
        board.skip(worker, task.id)
    assert board.tasks[task.id].skip_set == {"w1", "w2", "w3"}


def test_complete_lifecycle():
    board = simple_board(1)
    rng = SeededSource(7)
    task = board.next_task("w1", rng)
    board.complete("w1", task.id)
    assert task.state == DONE
    assert board.next_task("w1", rng) is None  # never offered again
    with pytest.raises(AlreadyDone):
        board.complete("w1", task.id)


def test_complete_unassigned():
    board = simple_board(1)
    with pytest.raises(NotAssignee):
        board.complete("w1", next(iter(board.tasks)))


def test_escalate_when_all_active_skipped():
    board = simple_board(1)
    rng = SeededSource(8)
    tid = next(iter(board.tasks))
    for worker in ("w1", "w2", "w3"):
        board.next_task(worker, rng)
        board.skip(worker, tid)
    escalated = board.escalate_check({"w1", "w2", "w3"})
    assert escalated == [tid]
    assert board.tasks[tid].state == ESCALATED


def test_no_escalation_with_partial_skips():
    board = simple_board(1)
    rng = SeededSource(9)
    tid = next(iter(board.tasks))
    for worker in ("w1", "w2"):
        board.next_task(worker, rng)
        board.skip(worker, tid)
    assert board.escalate_check({"w1", "w2", "w3"}) == []
    assert board.tasks[tid].state == OPEN


def test_escalate_no_open_tasks():
    board = TaskBoard()
    assert board.escalate_check({"w1"}) == []


def test_reopen_clears_skip_set():
    board = simple_board(1)
    rng = SeededSource(10)
    tid = next(iter(board.tasks))
    board.next_task("w1", rng)
    board.skip("w1", tid)
    board.escalate_check({"w1"})
    assert board.tasks[tid].state == ESCALATED
    board.reopen(tid)
    assert board.tasks[tid].state == OPEN and board.tasks[tid].skip_set == set()
    task = board.next_task("w1", rng)
    assert task is not None and task.id == tid


def test_reopen_idempotent_and_done_guard():
    board = simple_board(1)
    rng = SeededSource(11)
    tid = next(iter(board.tasks))
    board.reopen(tid)  # open: no-op
    board.next_task("w1", rng)
    board.reopen(tid)  # assigned: no-op
    assert board.tasks[tid].state == ASSIGNED
    board.complete("w1", tid)
    with pytest.raises(AlreadyDone):
        board.reopen(tid)


def test_mutual_exclusion_under_concurrent_pollers():
    # 8 threads hammer next_task/skip/complete through a shared lock (the
    # same serialization the orchestrator provides); no task may ever be
    # held by two workers.
    board = TaskBoard()
    board.seed(None, [{"description": f"t{i}"} for i in range(6)])
    lock = threading.Lock()
    rng = SeededSource(99)
    holders: dict[str, str] = {}
    violations: list[str] = []
    ops = 2000

    def run(worker_id: str):
        local = SeededSource(hash(worker_id) % 1000)
        for _ in range(ops // 8):
            with lock:
                task = board.next_task(worker_id, rng)
                if task is None:
                    for t in board.tasks.values():
                        if t.state == DONE:
                            t.state = OPEN  # recycle so the pool never dries up
                    continue
                current = holders.get(task.id)
                if current is not None and current != worker_id:
                    violations.append(task.id)
                holders[task.id] = worker_id
                if local.draw() < 0.5:
                    board.skip(worker_id, task.id)
                else:
                    board.complete(worker_id, task.id)
                del holders[task.id]

    threads = [threading.Thread(target=run, args=(f"w{i}",)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert violations == []
