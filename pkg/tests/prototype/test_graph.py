"""Tests for prototype mutations, snapshots and rollback."""

import pytest

from storyengine.prototype import (
    DuplicateName,
    EmptyParticipants,
    InvalidChapter,
    InvalidRelationship,
    NonMonotoneChapter,
    OutOfOrderSnapshot,
    Participation,
    StoryPrototype,
    StrengthOutOfRange,
    UnknownCharacter,
    UnknownScene,
    add_character,
    add_event,
    add_scene,
    find_scene,
    freeze,
    get_snapshot,
    snapshot_chapter,
    upsert_relationship,
)


def _seeded() -> StoryPrototype:
    """Two characters sealed into snapshot 0."""
    proto = StoryPrototype()
    add_character(proto, "Mara", {"age": 34}, 0)
    add_character(proto, "Tobias", {}, 0)
    snapshot_chapter(proto, 0)
    return proto


def _event(proto: StoryPrototype, chapter: int, who=("c1",)) -> str:
    scene = find_scene(proto, "harbour", "dusk") or None
    scene_id = scene.id if scene else add_scene(proto, "harbour", "dusk", "fog", chapter)
    return add_event(
        proto, chapter, "They meet", ["A deal"],
        [Participation(character=c, emotional_impact="wary") for c in who], scene_id,
    )


# ── Characters ───────────────────────────────────────────


def test_empty_prototype_has_no_head():
    proto = StoryPrototype()
    assert proto.head_chapter == -1
    assert proto.open_chapter == 0
    assert proto.is_empty()


def test_add_character_assigns_sequential_ids():
    proto = StoryPrototype()
    assert add_character(proto, "Mara", {}, 0) == "c1"
    assert add_character(proto, "Tobias", None, 0) == "c2"
    assert proto.character("c2").name == "Tobias"


def test_add_character_stringifies_attrs():
    proto = StoryPrototype()
    add_character(proto, "Mara", {"age": 34}, 0)
    assert proto.character("c1").static_attrs == {"age": "34"}


def test_add_character_duplicate_name_case_insensitive():
    proto = StoryPrototype()
    add_character(proto, "Mara", {}, 0)
    with pytest.raises(DuplicateName):
        add_character(proto, "  mara ", {}, 0)


def test_add_character_to_sealed_chapter_rejected():
    proto = _seeded()
    with pytest.raises(InvalidChapter):
        add_character(proto, "Elin", {}, 0)


def test_add_character_ahead_of_open_chapter_rejected():
    proto = _seeded()
    with pytest.raises(InvalidChapter):
        add_character(proto, "Elin", {}, 3)


# ── Relationships ────────────────────────────────────────


def test_upsert_relationship_keeps_history():
    proto = _seeded()
    upsert_relationship(proto, "c1", "c2", "rivalry", 0.6, "mutual", 1)
    snapshot_chapter(proto, 1)
    upsert_relationship(proto, "c1", "c2", "rivalry", 0.2, "mutual", 2)
    versions = [r for r in proto.relationships if r.kind == "rivalry"]
    assert [v.strength for v in versions] == [0.6, 0.2]
    assert proto.latest_version(("c1", "c2", "rivalry")).chapter == 2


def test_upsert_relationship_same_chapter_twice_is_non_monotone():
    proto = _seeded()
    upsert_relationship(proto, "c1", "c2", "alliance", 0.5, "mutual", 1)
    with pytest.raises(NonMonotoneChapter):
        upsert_relationship(proto, "c1", "c2", "alliance", 0.7, "mutual", 1)


def test_upsert_relationship_rejects_bad_input():
    proto = _seeded()
    with pytest.raises(StrengthOutOfRange):
        upsert_relationship(proto, "c1", "c2", "alliance", 1.5, "mutual", 1)
    with pytest.raises(InvalidRelationship):
        upsert_relationship(proto, "c1", "c1", "alliance", 0.5, "mutual", 1)
    with pytest.raises(InvalidRelationship):
        upsert_relationship(proto, "c1", "c2", "friendship", 0.5, "mutual", 1)
    with pytest.raises(UnknownCharacter):
        upsert_relationship(proto, "c1", "c9", "alliance", 0.5, "mutual", 1)


def test_upsert_relationship_accepts_other_kind():
    proto = _seeded()
    version = upsert_relationship(proto, "c1", "c2", "other:debt", 0.4, "directed", 1)
    assert version.kind == "other:debt"


# ── Events and scenes ────────────────────────────────────


def test_add_event_links_scene_and_participants():
    proto = _seeded()
    event_id = _event(proto, 1, who=("c1", "c2"))
    event = proto.events[0]
    assert event_id == "e1"
    assert event.scene == "s1"
    assert [p.character for p in event.participants] == ["c1", "c2"]


def test_add_event_requires_participants_and_scene():
    proto = _seeded()
    scene_id = add_scene(proto, "harbour", "dusk", "", 1)
    with pytest.raises(EmptyParticipants):
        add_event(proto, 1, "Nobody", [], [], scene_id)
    with pytest.raises(UnknownScene):
        add_event(proto, 1, "Lost", [], [Participation(character="c1", emotional_impact="x")], "s9")
    with pytest.raises(UnknownCharacter):
        add_event(proto, 1, "Ghost", [], [Participation(character="c7", emotional_impact="x")], scene_id)


def test_find_scene_matches_location_and_time():
    proto = _seeded()
    add_scene(proto, "harbour", "dusk", "", 1)
    assert find_scene(proto, "harbour", "dusk").id == "s1"
    assert find_scene(proto, "harbour", "dawn") is None


# ── Snapshots ────────────────────────────────────────────


def test_snapshot_excludes_later_chapters():
    proto = _seeded()
    for chapter in range(1, 6):
        _event(proto, chapter)
        snapshot_chapter(proto, chapter)
    proto_events = {e.id: e.chapter for e in proto.events}
    fourth = {e.id for e in get_snapshot(proto, 4).events}
    fifth = {e.id for e in get_snapshot(proto, 5).events}
    last = [i for i, c in proto_events.items() if c == 5][0]
    assert last not in fourth
    assert last in fifth


def test_snapshot_out_of_order_rejected():
    proto = _seeded()
    with pytest.raises(OutOfOrderSnapshot):
        snapshot_chapter(proto, 2)
    with pytest.raises(OutOfOrderSnapshot):
        snapshot_chapter(proto, 0)


def test_snapshot_of_empty_open_chapter():
    proto = _seeded()
    snapshot = snapshot_chapter(proto, 1)
    assert snapshot.chapter == 1
    assert snapshot.events == ()
    assert len(snapshot.characters) == 2


def test_get_snapshot_unknown_chapter():
    proto = _seeded()
    with pytest.raises(InvalidChapter):
        get_snapshot(proto, 1)


def test_snapshot_equals_replay():
    proto = _seeded()
    upsert_relationship(proto, "c1", "c2", "rivalry", 0.6, "mutual", 1)
    _event(proto, 1, who=("c1", "c2"))
    snapshot_chapter(proto, 1)
    add_character(proto, "Elin", {}, 2)
    _event(proto, 2, who=("c3",))
    snapshot_chapter(proto, 2)
    for chapter in range(3):
        snapshot = get_snapshot(proto, chapter)
        replay = freeze(proto, chapter, snapshot.created_at)
        assert snapshot.characters == replay.characters
        assert snapshot.relationships == replay.relationships
        assert snapshot.events == replay.events
        assert snapshot.scenes == replay.scenes


def test_snapshot_is_immutable():
    proto = _seeded()
    snapshot = get_snapshot(proto, 0)
    with pytest.raises(Exception):
        snapshot.chapter = 5


# ── Rollback ─────────────────────────────────────────────


def test_rollback_discards_open_chapter_work():
    proto = _seeded()
    cp = proto.checkpoint()
    add_character(proto, "Elin", {}, 1)
    upsert_relationship(proto, "c1", "c2", "alliance", 0.5, "mutual", 1)
    _event(proto, 1)
    snapshot_chapter(proto, 1)
    proto.rollback(cp)
    assert proto.head_chapter == 0
    assert len(proto.characters) == 2
    assert proto.relationships == []
    assert proto.events == []
    assert 1 not in proto.snapshots
    assert proto.character("c3") is None
    assert proto.latest_version(("c1", "c2", "alliance")) is None
