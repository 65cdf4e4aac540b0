"""Tests for limited views, relationship histories, plot chains and digests."""

import pytest

from storyengine.prototype import (
    InvalidChapter,
    InvalidRange,
    Participation,
    StoryPrototype,
    UnknownCharacter,
    add_character,
    add_event,
    add_scene,
    describe_view,
    get_snapshot,
    latest_relationships,
    limited_view,
    plot_chain,
    relationship_at,
    relationship_history,
    set_meta,
    snapshot_chapter,
    summarize_snapshot,
    upsert_relationship,
)


def _village() -> StoryPrototype:
    """Three characters over two chapters; Elin never meets Mara alone."""
    proto = StoryPrototype()
    set_meta(proto, title="Tides", background="An island village.", long_term_goal="Find the keeper.")
    add_character(proto, "Mara", {"age": 34}, 0)
    add_character(proto, "Tobias", {}, 0)
    add_character(proto, "Elin", {}, 0)
    upsert_relationship(proto, "c1", "c2", "rivalry", 0.6, "mutual", 0)
    upsert_relationship(proto, "c2", "c3", "kinship", 0.9, "mutual", 0)
    snapshot_chapter(proto, 0)

    harbour = add_scene(proto, "harbour", "day 1", "fog", 1)
    chapel = add_scene(proto, "chapel", "night 1", "", 1)
    add_event(proto, 1, "Mara and Tobias argue over the logbook", ["The logbook vanishes"], [
        Participation(character="c1", emotional_impact="anger at Tobias", impact_intensity=-0.6),
        Participation(character="c2", emotional_impact="guilt he hides", impact_intensity=-0.3),
    ], harbour)
    add_event(proto, 1, "Tobias confesses to Elin", [], [
        Participation(character="c2", emotional_impact="relief"),
        Participation(character="c3", emotional_impact="fear for her brother"),
    ], chapel)
    snapshot_chapter(proto, 1)

    upsert_relationship(proto, "c1", "c2", "rivalry", 0.3, "mutual", 2)
    add_event(proto, 2, "Mara finds the logbook", ["The keeper is named"], [
        Participation(character="c1", emotional_impact="hope", impact_intensity=0.7),
    ], harbour)
    snapshot_chapter(proto, 2)
    return proto


# ── limited_view ─────────────────────────────────────────


def test_limited_view_keeps_own_events_only():
    view = limited_view(_village(), "c1", 2)
    assert [e.id for e in view.events] == ["e1", "e3"]
    assert view.events[0].own.emotional_impact == "anger at Tobias"
    assert view.events[0].co_participants == ("c2",)


def test_limited_view_hides_co_participant_impacts():
    view = limited_view(_village(), "c1", 2)
    text = view.model_dump_json()
    assert "guilt he hides" not in text
    assert "fear for her brother" not in text
    assert "Tobias confesses" not in text


def test_limited_view_relationships_are_incident():
    view = limited_view(_village(), "c1", 2)
    assert all("c1" in (r.src, r.dst) for r in view.relationships)
    assert [r.strength for r in view.relationships] == [0.6, 0.3]


def test_limited_view_scenes_follow_events():
    view = limited_view(_village(), "c3", 2)
    assert [s.location for s in view.scenes] == ["chapel"]
    assert view.background == "An island village."
    assert view.long_term_goal == "Find the keeper."


def test_limited_view_respects_chapter():
    view = limited_view(_village(), "c1", 1)
    assert [e.id for e in view.events] == ["e1"]
    assert [r.strength for r in view.relationships] == [0.6]


def test_limited_view_errors():
    proto = _village()
    with pytest.raises(UnknownCharacter):
        limited_view(proto, "c9", 1)
    with pytest.raises(InvalidChapter):
        limited_view(proto, "c1", 3)


def test_describe_view_limits_events():
    text = describe_view(limited_view(_village(), "c1", 2), event_limit=1)
    assert "You are Mara [c1] (age: 34)." in text
    assert "Mara finds the logbook" in text
    assert "argue over the logbook" not in text
    assert "rivalry 0.30" in text
    assert "rivalry 0.60" not in text


# ── Relationships ────────────────────────────────────────


def test_relationship_history_sorted_by_kind_then_chapter():
    proto = _village()
    upsert_relationship(proto, "c1", "c2", "alliance", 0.4, "directed", 3)
    history = relationship_history(proto, "c1", "c2")
    assert [(r.kind, r.chapter) for r in history] == [("alliance", 3), ("rivalry", 0), ("rivalry", 2)]


def test_relationship_history_is_directional():
    assert relationship_history(_village(), "c2", "c1") == []


def test_relationship_history_unknown_character():
    with pytest.raises(UnknownCharacter):
        relationship_history(_village(), "c1", "c8")


def test_relationship_at_picks_effective_version():
    proto = _village()
    assert relationship_at(proto.relationships, "c1", "c2", "rivalry", 1).strength == 0.6
    assert relationship_at(proto.relationships, "c1", "c2", "rivalry", 2).strength == 0.3
    assert relationship_at(proto.relationships, "c1", "c3", "rivalry", 2) is None


def test_latest_relationships_one_per_key():
    latest = latest_relationships(_village().relationships)
    assert [(r.src, r.dst, r.strength) for r in latest] == [("c1", "c2", 0.3), ("c2", "c3", 0.9)]


# ── plot_chain ───────────────────────────────────────────


def test_plot_chain_orders_by_chapter():
    proto = _village()
    assert [e.id for e in plot_chain(proto, 0, 2)] == ["e1", "e2", "e3"]
    assert [e.id for e in plot_chain(proto, 2, 2)] == ["e3"]


def test_plot_chain_invalid_range():
    proto = _village()
    with pytest.raises(InvalidRange):
        plot_chain(proto, 2, 1)
    with pytest.raises(InvalidRange):
        plot_chain(proto, 0, 5)
    with pytest.raises(InvalidRange):
        plot_chain(proto, -1, 1)


# ── Digests ──────────────────────────────────────────────


def test_summarize_snapshot_lists_chapter_events():
    text = summarize_snapshot(get_snapshot(_village(), 1))
    assert "Title: Tides" in text
    assert "- Mara [c1] (age: 34)" in text
    assert "Mara <-> Tobias: rivalry 0.60 (since chapter 0)" in text
    assert "Events of chapter 1:" in text
    assert "[e2] Tobias confesses to Elin @ chapel (Tobias, Elin)" in text
    assert "consequence: The logbook vanishes" in text


def test_summarize_snapshot_is_deterministic():
    proto = _village()
    assert summarize_snapshot(get_snapshot(proto, 2)) == summarize_snapshot(get_snapshot(proto, 2))
