"""Simulator: transcript running, determinism, personas, the scale fixture."""

import random

import pytest

from crowdscribe.core import ServerCore
from crowdscribe.sim import (
    EXPECTED_PAPER_SCALE,
    Action,
    Transcript,
    UnexpectedError,
    fixture_outline,
    fixture_paper_scale,
    gen_expand_bullets_worker,
    oracle_shape,
    run_transcript,
    server_shape,
)

AUTHOR_ACTOR = {"actor_id": "author", "role": "author"}


def one_dictation_transcript(seed=5):
    return Transcript(
        actors=[AUTHOR_ACTOR],
        seed=seed,
        actions=[
            Action(0, "author", "author", "create_document", {"seed_outline": "# Notes\n- starter\n"}),
            Action(1, "author", "author", "dictate_block", {
                "doc_id": "doc-1", "parent_id": "blk-1", "kind": "bullet", "text": "spoken line",
            }),
        ],
    )


def test_single_dictation_matches_direct_api():
    transcript = one_dictation_transcript()
    report = run_transcript(ServerCore(rng_seed=5), transcript)

    direct = ServerCore(rng_seed=5)
    session = direct.create_session("author", "author")
    direct.handle("create_document", session.token, {"seed_outline": "# Notes\n- starter\n"})
    direct.handle("dictate_block", session.token, {
        "doc_id": "doc-1", "parent_id": "blk-1", "kind": "bullet", "text": "spoken line",
    })
    assert report.final_digest == direct.state_digest()


def test_runner_requires_fresh_server():
    transcript = one_dictation_transcript()
    server = ServerCore(rng_seed=5)
    run_transcript(server, transcript)
    with pytest.raises(ValueError):
        run_transcript(server, transcript)
    with pytest.raises(ValueError):
        run_transcript(ServerCore(rng_seed=6), transcript)


def test_same_transcript_twice_identical_digests():
    transcript = one_dictation_transcript()
    r1 = run_transcript(ServerCore(rng_seed=5), transcript)
    r2 = run_transcript(ServerCore(rng_seed=5), transcript)
    assert r1.to_record() == r2.to_record()


def conflict_transcript():
    outline = "# S\n- only bullet\n"
    return Transcript(
        actors=[AUTHOR_ACTOR, {"actor_id": "w1", "role": "worker"}, {"actor_id": "w2", "role": "worker"}],
        seed=1,
        actions=[
            Action(0, "author", "author", "create_document", {"seed_outline": outline}),
            Action(1, "w1", "worker", "propose_edit", {
                "doc_id": "doc-1", "submission_id": "s1",
                "spec": {"kind": "replace", "block_id": "blk-2", "new_text": "one"},
            }),
            Action(2, "w2", "worker", "propose_edit", {
                "doc_id": "doc-1", "submission_id": "s2",
                "spec": {"kind": "replace", "block_id": "blk-2", "new_text": "two"},
            }),
            Action(3, "author", "author", "review_edit", {"edit_id": "edt-1", "decision": "accept"}),
            Action(4, "author", "author", "review_edit", {
                "edit_id": "edt-2", "decision": "accept",
            }, expect_error="stale_edit"),
        ],
    )


def test_declared_conflict_passes_and_is_reported():
    report = run_transcript(ServerCore(rng_seed=1), conflict_transcript())
    assert report.errors_encountered == [(4, "stale_edit")]


def test_undeclared_error_fails_run():
    transcript = conflict_transcript()
    transcript.actions[4].expect_error = None
    with pytest.raises(UnexpectedError) as err:
        run_transcript(ServerCore(rng_seed=1), transcript)
    assert err.value.code == "stale_edit" and err.value.action_index == 4


def test_expected_error_that_never_happens_fails_run():
    transcript = one_dictation_transcript()
    transcript.actions[1].expect_error = "stale_edit"
    with pytest.raises(UnexpectedError):
        run_transcript(ServerCore(rng_seed=5), transcript)


def test_transcript_file_round_trip(tmp_path):
    transcript = conflict_transcript()
    path = tmp_path / "conflict.jsonl"
    transcript.save(path)
    loaded = Transcript.load(path)
    assert loaded.seed == transcript.seed
    assert [a.to_record() for a in loaded.actions] == [a.to_record() for a in transcript.actions]
    report = run_transcript(ServerCore(rng_seed=1), loaded)
    assert report.errors_encountered == [(4, "stale_edit")]


def setup_for_personas():
    server = ServerCore(rng_seed=9)
    author = server.create_session("author", "author")
    server.handle("create_document", author.token, {
        "seed_outline": "# Alpha\n- a1\n- a2\n- a3\n# Beta\n- b1\n# Empty\n",
        "task_templates": [
            {"description": "expand alpha", "target_section_title": "Alpha"},
            {"description": "expand beta", "target_section_title": "Beta"},
            {"description": "expand empty", "target_section_title": "Empty"},
        ],
    })
    view = server.handle("get_document", author.token, {"doc_id": "doc-1"})
    return server, author, view


def test_expand_bullets_three_bullets():
    server, author, view = setup_for_personas()
    board = server.boards["doc-1"]
    task = next(t for t in board.tasks.values() if t.description == "expand alpha")
    worker = server.create_session("w7", "worker", "doc-1")
    server.handle("next_task", worker.token, {"doc_id": "doc-1", "claim": task.id})
    actions = gen_expand_bullets_worker(7, view, task.to_record())
    proposals = [a for a in actions if a.endpoint == "propose_edit"]
    assert len(proposals) == 6  # one insert + one format per bullet
    assert actions[-1].endpoint == "complete_task"
    assert len({a.payload["submission_id"] for a in proposals}) == 1
    for action in actions:
        server.handle(action.endpoint, worker.token, action.payload)
    # Author accepts everything; all cleanly applicable.
    for edit_id in list(server.books["doc-1"].edits):
        out = server.handle("review_edit", author.token, {"edit_id": edit_id, "decision": "accept"})
        assert out["applied_revision"] is not None
    assert task.state == "done"


def test_expand_bullets_empty_section_skips():
    server, author, view = setup_for_personas()
    board = server.boards["doc-1"]
    task = next(t for t in board.tasks.values() if t.description == "expand empty")
    actions = gen_expand_bullets_worker(7, view, task.to_record())
    assert [a.endpoint for a in actions] == ["skip_task"]


def test_expand_bullets_disjoint_workers_commute():
    # Two workers on disjoint sections: accepting their edit sets in either
    # worker order (each worker's own emission order preserved, since a
    # bullet's insert must land before its format toggle) yields the same
    # document and zero staleness.
    def run(interleave):
        server, author, view = setup_for_personas()
        board = server.boards["doc-1"]
        tokens = {}
        per_worker_edits = {}
        for n, desc in ((1, "expand alpha"), (2, "expand beta")):
            worker = server.create_session(f"w{n}", "worker", "doc-1")
            tokens[n] = worker.token
            task = next(t for t in board.tasks.values() if t.description == desc)
            server.handle("next_task", worker.token, {"doc_id": "doc-1", "claim": task.id})
            edit_ids = []
            for action in gen_expand_bullets_worker(n, view, task.to_record()):
                out = server.handle(action.endpoint, tokens[n], action.payload)
                if action.endpoint == "propose_edit":
                    edit_ids.append(out["edit_id"])
            per_worker_edits[n] = edit_ids
        for edit_id in interleave(per_worker_edits[1], per_worker_edits[2]):
            out = server.handle("review_edit", author.token, {"edit_id": edit_id, "decision": "accept"})
            assert out["applied_revision"] is not None
            assert out["newly_stale"] == []
        return server.handle("get_document", author.token, {"doc_id": "doc-1"})

    def round_robin(a, b):
        out = []
        for i in range(max(len(a), len(b))):
            if i < len(b):
                out.append(b[i])
            if i < len(a):
                out.append(a[i])
        return out

    one_then_two = run(lambda a, b: a + b)
    two_then_one = run(lambda a, b: b + a)
    mixed = run(round_robin)
    assert one_then_two == two_then_one == mixed


def random_small_transcript(seed):
    """Scratch-run generator: at most 20 valid actions, recorded concretely."""
    rng = random.Random(seed)
    server = ServerCore(rng_seed=seed)
    author = server.create_session("author", "author")
    actions = [Action(0, "author", "author", "create_document", {"seed_outline": "# One\n- a\n- b\n# Two\n- c\n"})]
    server.handle("create_document", author.token, actions[0].payload)
    worker = server.create_session("w1", "worker", "doc-1")
    doc = server.docs["doc-1"]
    tick = 1
    while len(actions) < rng.randint(6, 20):
        bullets = [b for b in doc.blocks.values() if b.kind == "bullet"]
        sections = doc.sections()
        roll = rng.random()
        if roll < 0.35:
            payload = {"doc_id": "doc-1", "parent_id": rng.choice(sections).id, "kind": "bullet", "text": f"d{tick}"}
            actions.append(Action(tick, "author", "author", "dictate_block", payload))
            server.handle("dictate_block", author.token, payload)
        elif roll < 0.55 and bullets:
            payload = {"doc_id": "doc-1", "block_id": rng.choice(bullets).id, "done": True}
            actions.append(Action(tick, "author", "author", "set_block_done", payload))
            server.handle("set_block_done", author.token, payload)
        elif len(actions) <= 18:
            spec_roll = rng.random()
            if spec_roll < 0.5 and bullets:
                spec = {"kind": "replace", "block_id": rng.choice(bullets).id, "new_text": f"r{tick}"}
            elif spec_roll < 0.75 and bullets:
                spec = {"kind": "delete", "block_id": rng.choice(bullets).id}
            else:
                spec = {"kind": "insert", "parent_id": rng.choice(sections).id, "after_id": None,
                        "block_kind": "paragraph", "new_text": f"p{tick}"}
            payload = {"doc_id": "doc-1", "submission_id": f"s{tick}", "spec": spec}
            actions.append(Action(tick, "w1", "worker", "propose_edit", payload))
            out = server.handle("propose_edit", worker.token, payload)
            review = {"edit_id": out["edit_id"], "decision": rng.choice(["accept", "accept", "reject"])}
            actions.append(Action(tick, "author", "author", "review_edit", review))
            server.handle("review_edit", author.token, review)
        tick += 1
    return Transcript(actors=[AUTHOR_ACTOR, {"actor_id": "w1", "role": "worker"}], seed=seed, actions=actions)


def test_oracle_agreement_small_transcripts():
    for seed in range(25):
        transcript = random_small_transcript(seed)
        server = ServerCore(rng_seed=seed)
        run_transcript(server, transcript)
        assert oracle_shape(server.events) == server_shape(server), f"seed {seed}"


def test_no_mutation_without_event():
    # Revision counts exactly the dictations plus accepted reviews in the log.
    transcript = random_small_transcript(99)
    server = ServerCore(rng_seed=99)
    run_transcript(server, transcript)
    doc = server.docs["doc-1"]
    mutations = sum(
        1 for e in server.events
        if e.kind == "block_dictated"
        or (e.kind == "edit_reviewed" and e.payload["decision"] == "accept")
    )
    assert doc.revision == mutations


def test_concurrent_ticks_commuting_actions_same_digest():
    outline = "# A\n- a1\n# B\n- b1\n"
    base_actions = [
        Action(0, "author", "author", "create_document", {"seed_outline": outline}),
        Action(1, "w1", "worker", "open_thread", {"doc_id": "doc-1", "anchor": "blk-2", "text": "q1"}),
        Action(2, "w2", "worker", "open_thread", {"doc_id": "doc-1", "anchor": "blk-4", "text": "q2"}),
        # Same tick, distinct threads: these commute.
        Action(3, "w1", "worker", "reply_thread", {"thread_id": "thr-1", "text": "more on q1"}),
        Action(3, "w2", "worker", "reply_thread", {"thread_id": "thr-2", "text": "more on q2"}),
        # Same tick, distinct bullets.
        Action(4, "author", "author", "set_block_done", {"doc_id": "doc-1", "block_id": "blk-2", "done": True}),
        Action(4, "author", "author", "set_block_done", {"doc_id": "doc-1", "block_id": "blk-4", "done": True}),
    ]
    actors = [AUTHOR_ACTOR, {"actor_id": "w1", "role": "worker"}, {"actor_id": "w2", "role": "worker"}]
    transcript = Transcript(actors=actors, seed=2, actions=base_actions)
    serial = run_transcript(ServerCore(rng_seed=2), transcript)
    for _ in range(3):
        concurrent = run_transcript(ServerCore(rng_seed=2), transcript, concurrent_ticks=True)
        assert concurrent.final_digest == serial.final_digest


def test_fixture_outline_scale():
    outline = fixture_outline()
    headings = [ln for ln in outline.splitlines() if ln.startswith("# ")]
    bullets = [ln for ln in outline.splitlines() if ln.startswith("- ")]
    assert len(headings) >= 10 and len(bullets) >= 30


def test_fixture_paper_scale_metrics_and_cleanliness():
    transcript = fixture_paper_scale()
    assert len([a for a in transcript.actors if a["role"] == "worker"]) == 5
    server = ServerCore(rng_seed=transcript.seed)
    report = run_transcript(server, transcript)
    assert report.metrics.to_record() == EXPECTED_PAPER_SCALE
    assert report.errors_encountered == []
    assert not server.books["doc-1"].pending()
    assert report.tasks_outcome == {"done": 11}
    assert "comment_split" in transcript.notes


def test_fixture_log_replays_to_live_digest():
    # The fixture log is the only one exercising escalation and reopen;
    # replaying it must land on the live digest like any other log.
    from crowdscribe.core import replay

    transcript = fixture_paper_scale()
    server = ServerCore(rng_seed=transcript.seed)
    run_transcript(server, transcript)
    replayed = replay(server.events, rng_seed=transcript.seed)
    assert replayed.state_digest() == server.state_digest()
