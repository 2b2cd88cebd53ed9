"""Document tree: outline parsing, ordering, rendering, pagination, interchange."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdscribe import document as doc_mod
from crowdscribe.document import (
    BULLET,
    PARAGRAPH,
    ROOT,
    SECTION,
    DocumentTree,
    document_pages,
    export,
    import_structured,
    paginate,
    parse_seed_outline,
    render_canonical,
    render_lines,
)
from crowdscribe.errors import (
    KindMismatch,
    MalformedOutline,
    UnknownAnchor,
    UnknownParent,
)

OUTLINE = "# Title\n- Smartwatch Field Notes: Drafting Reports on the Move\n"


def test_parse_single_heading_and_bullet():
    doc = parse_seed_outline(OUTLINE)
    doc.validate()
    assert doc.revision == 0
    sections = doc.sections()
    assert len(sections) == 1 and sections[0].text == "Title"
    kids = doc.children(sections[0].id)
    assert len(kids) == 1 and kids[0].kind == BULLET


def test_parse_empty_input():
    doc = parse_seed_outline("")
    assert doc.blocks == {} and doc.revision == 0


def test_parse_orphan_bullet():
    with pytest.raises(MalformedOutline) as err:
        parse_seed_outline("- orphan")
    assert err.value.line_no == 1


def test_parse_garbage_line_number():
    with pytest.raises(MalformedOutline) as err:
        parse_seed_outline("# ok\n- fine\n* wat")
    assert err.value.line_no == 3


def test_parse_blank_lines_ignored():
    doc = parse_seed_outline("\n# A\n\n- one\n\n\n- two\n")
    doc.validate()
    sec = doc.sections()[0]
    assert [b.text for b in doc.children(sec.id)] == ["one", "two"]


def test_insert_forces_revision_increment():
    doc = parse_seed_outline("# A")
    sec = doc.sections()[0].id
    doc.revision = 5
    _, rev = doc.insert_block(sec, None, BULLET, "x")
    assert rev == 6
    doc.validate()


def test_insert_between_siblings_key_order():
    doc = DocumentTree("d")
    sec, _ = doc.insert_block(ROOT, None, SECTION, "S")
    a, _ = doc.insert_block(sec, None, BULLET, "a")
    b, _ = doc.insert_block(sec, a, BULLET, "b")
    mid, _ = doc.insert_block(sec, a, BULLET, "middle")
    ka, kb, km = (doc.blocks[x].order_key for x in (a, b, mid))
    assert ka < km < kb
    assert [blk.text for blk in doc.children(sec)] == ["a", "middle", "b"]
    doc.validate()


def test_insert_kind_rules():
    doc = DocumentTree("d")
    sec, _ = doc.insert_block(ROOT, None, SECTION, "S")
    bullet, _ = doc.insert_block(sec, None, BULLET, "b")
    with pytest.raises(KindMismatch):
        doc.insert_block(sec, None, SECTION, "nested")
    with pytest.raises(KindMismatch):
        doc.insert_block(bullet, None, PARAGRAPH, "under bullet")
    with pytest.raises(UnknownParent):
        doc.insert_block("nope", None, BULLET, "x")
    with pytest.raises(UnknownAnchor):
        doc.insert_block(sec, "nope", BULLET, "x")


def test_anchor_must_be_child_of_parent():
    doc = DocumentTree("d")
    s1, _ = doc.insert_block(ROOT, None, SECTION, "one")
    s2, _ = doc.insert_block(ROOT, s1, SECTION, "two")
    b, _ = doc.insert_block(s1, None, BULLET, "x")
    with pytest.raises(UnknownAnchor):
        doc.insert_block(s2, b, BULLET, "y")


def test_delete_leaf_and_refuse_nonempty_section():
    doc = DocumentTree("d")
    sec, _ = doc.insert_block(ROOT, None, SECTION, "S")
    b, _ = doc.insert_block(sec, None, BULLET, "x")
    with pytest.raises(KindMismatch):
        doc.delete_block(sec)
    doc.delete_block(b)
    doc.validate()
    assert doc.children(sec) == []
    doc.delete_block(sec)
    doc.validate()
    assert doc.blocks == {}


def test_done_only_on_bullets():
    doc = DocumentTree("d")
    sec, _ = doc.insert_block(ROOT, None, SECTION, "S")
    with pytest.raises(KindMismatch):
        doc.set_done(sec, True)


def test_render_empty_doc():
    assert render_canonical(DocumentTree("d")) == ""


def test_render_done_bullet_strikethrough():
    doc = DocumentTree("d")
    sec, _ = doc.insert_block(ROOT, None, SECTION, "Plan")
    b, _ = doc.insert_block(sec, None, BULLET, "collect the notes")
    doc.set_done(b, True)
    assert "- ~~collect the notes~~" in render_canonical(doc).split("\n")


def test_render_deterministic():
    doc = parse_seed_outline("# A\n- one\n- two\n# B\n- three\n")
    assert render_canonical(doc) == render_canonical(doc)


def test_render_section_underline_and_paragraph_wrap():
    doc = DocumentTree("d")
    sec, _ = doc.insert_block(ROOT, None, SECTION, "Heading")
    doc.insert_block(sec, None, PARAGRAPH, "word " * 60)
    lines = render_canonical(doc).split("\n")
    assert lines[0] == "Heading"
    assert lines[1] == "-" * len("Heading")
    assert all(len(line) <= 80 for line in lines)
    assert len(lines) > 3  # the paragraph wrapped


def test_paginate_ceiling_arithmetic():
    text = "\n".join(f"line {i}" for i in range(100))
    pages = paginate(text, 40)
    assert [len(p.lines) for p in pages] == [40, 40, 20]
    assert [p.index for p in pages] == [0, 1, 2]


def test_paginate_empty():
    assert paginate("", 40) == []


def test_paginate_exact_boundary():
    text = "\n".join(f"line {i}" for i in range(40))
    assert len(paginate(text, 40)) == 1


def test_paginate_partition_property():
    rng = random.Random(3)
    for _ in range(50):
        doc = DocumentTree("d")
        for s in range(rng.randint(0, 5)):
            sec, _ = doc.insert_block(ROOT, None, SECTION, f"S{s}")
            for b in range(rng.randint(0, 8)):
                kind = rng.choice([BULLET, PARAGRAPH])
                doc.insert_block(sec, None, kind, f"text {b} " * rng.randint(1, 30))
        rendered = render_canonical(doc)
        height = rng.randint(1, 200)
        pages = paginate(rendered, height)
        assert all(len(p.lines) <= height for p in pages)
        joined = "\n".join("\n".join(p.lines) for p in pages)
        assert joined == rendered


@given(st.integers(min_value=1, max_value=7), st.integers(min_value=0, max_value=30))
@settings(max_examples=60, deadline=None)
def test_paginate_line_counts(height, n_lines):
    text = "\n".join(f"l{i}" for i in range(n_lines))
    pages = paginate(text, height) if n_lines else []
    total = sum(len(p.lines) for p in pages)
    assert total == n_lines
    for p in pages[:-1]:
        assert len(p.lines) == height


def test_document_pages_block_attribution():
    doc = DocumentTree("d")
    sec, _ = doc.insert_block(ROOT, None, SECTION, "S")
    ids = [sec]
    for i in range(10):
        bid, _ = doc.insert_block(sec, ids[-1] if i else None, BULLET, f"b{i}")
        ids.append(bid)
    pages = document_pages(doc, page_height=4)
    seen = [bid for p in pages for bid in p.block_ids]
    assert seen == [line.block_id for line in render_lines(doc) if line.starts_block]


def test_export_plain_equals_render():
    doc = parse_seed_outline("# A\n- one\n")
    assert export(doc, "plain") == render_canonical(doc).encode("utf-8")


def test_export_structured_round_trip():
    doc = parse_seed_outline("# A\n- one\n- two\n# B\n- three\n")
    doc.set_done(doc.children(doc.sections()[0].id)[0].id, True)
    data = export(doc, "structured")
    clone = import_structured(data)
    assert export(clone, "structured") == data
    assert clone.revision == doc.revision
    assert set(clone.blocks) == set(doc.blocks)
    clone.validate()


def test_seed_outline_round_trip_order():
    outline = "# First\n- alpha\n- beta\n# Second\n- gamma\n"
    doc = parse_seed_outline(outline)
    plain = export(doc, "plain").decode("utf-8")
    pos = [plain.index(t) for t in ("First", "alpha", "beta", "Second", "gamma")]
    assert pos == sorted(pos)


def test_validator_runs_after_random_mutations():
    rng = random.Random(11)
    doc = DocumentTree("d")
    live: list[str] = []
    for _ in range(300):
        op = rng.random()
        if op < 0.3 or not doc.sections():
            sid, _ = doc.insert_block(ROOT, None, SECTION, f"s{rng.random():.3f}")
            live.append(sid)
        elif op < 0.7:
            sec = rng.choice(doc.sections())
            kids = doc.child_ids(sec.id)
            after = rng.choice(kids) if kids and rng.random() < 0.5 else None
            bid, _ = doc.insert_block(sec.id, after, rng.choice([BULLET, PARAGRAPH]), "t")
            live.append(bid)
        elif op < 0.85:
            leaves = [b for b in doc.blocks.values() if not doc.child_ids(b.id)]
            if leaves:
                victim = rng.choice(leaves)
                doc.delete_block(victim.id)
                if victim.id in live:
                    live.remove(victim.id)
        else:
            bullets = [b for b in doc.blocks.values() if b.kind == BULLET]
            if bullets:
                doc.set_done(rng.choice(bullets).id, rng.random() < 0.5)
        doc.validate()


def test_module_default_page_height():
    assert doc_mod.DEFAULT_PAGE_HEIGHT == 40
