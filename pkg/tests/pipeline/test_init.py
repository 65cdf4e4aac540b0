"""Tests for initialization: brief extraction, defaults, and snapshot 0."""

import json

import pytest

from storyengine.pipeline import (
    CharacterDraft,
    InitialConfig,
    NoCharacters,
    NonEmptyPrototype,
    PreconditionError,
    RelationshipDraft,
    complete_config,
    extract_config,
    materialize,
)
from storyengine.prototype import StoryPrototype, add_character, get_snapshot, summarize_snapshot, validate
from storyengine.structured import SchemaViolation

from tests.factories import SETUP, make_agents


def _config(**overrides) -> InitialConfig:
    return InitialConfig.model_validate({**SETUP, **overrides})


# ── extract_config ───────────────────────────────────────


@pytest.mark.asyncio
async def test_extract_config_parses_reply():
    agents = make_agents({"init": [json.dumps(SETUP)]})
    config = await extract_config("A woman returns to an island.", agents)
    assert [c.name for c in config.characters] == ["Mara", "Tobias"]
    assert config.characters[0].static_attrs == {"age": "34"}
    assert config.relationships[0].kind == "rivalry"


@pytest.mark.asyncio
async def test_extract_config_repairs_once():
    agents = make_agents({"init": ["I cannot answer in JSON.", json.dumps(SETUP)]})
    config = await extract_config("A woman returns to an island.", agents)
    assert config.title == "The Dark Lighthouse"


@pytest.mark.asyncio
async def test_extract_config_rejects_relationship_to_unlisted_character():
    bad = {**SETUP, "relationships": [
        {"src_name": "Mara", "dst_name": "Ghost", "kind": "rivalry", "strength": 0.2, "direction": "mutual"},
    ]}
    agents = make_agents({"init": [json.dumps(bad), json.dumps(bad)]})
    with pytest.raises(SchemaViolation):
        await extract_config("A woman returns to an island.", agents)


@pytest.mark.asyncio
async def test_extract_config_empty_brief():
    with pytest.raises(PreconditionError):
        await extract_config("   ", make_agents())


def test_initial_config_requires_goal():
    with pytest.raises(ValueError):
        _config(long_term_goal=" ")


def test_relationship_draft_kind():
    assert RelationshipDraft(src_name="a", dst_name="b", kind="other:debt").kind == "other:debt"
    with pytest.raises(ValueError):
        RelationshipDraft(src_name="a", dst_name="b", kind="friendship")


# ── complete_config ──────────────────────────────────────


def test_complete_config_fills_defaults():
    config = _config(title="", relationships=[
        {"src_name": "Mara", "dst_name": "Tobias", "kind": "alliance", "strength": None},
    ])
    completed = complete_config(config)
    assert completed.title == "A fishing village on a cold"
    assert completed.environment == SETUP["background"]
    assert completed.relationships[0].strength == 0.5


def test_complete_config_is_idempotent():
    once = complete_config(_config(title=""))
    assert complete_config(once) == once


def test_complete_config_untitled_without_background():
    assert complete_config(_config(title="", background="")).title == "Untitled"


def test_complete_config_needs_characters():
    with pytest.raises(NoCharacters):
        complete_config(_config(characters=[], relationships=[]))


# ── materialize ──────────────────────────────────────────


def test_materialize_writes_snapshot_zero():
    proto = StoryPrototype()
    materialize(_config(), proto)
    snapshot = get_snapshot(proto, 0)
    assert proto.head_chapter == 0
    assert [c.id for c in snapshot.characters] == ["c1", "c2"]
    assert snapshot.meta.title == "The Dark Lighthouse"
    assert snapshot.meta.environment == SETUP["background"]
    rel = snapshot.relationships[0]
    assert (rel.src, rel.dst, rel.kind, rel.strength, rel.chapter) == ("c1", "c2", "rivalry", 0.6, 0)
    assert validate(proto) == []


def test_materialize_keeps_world_rules():
    proto = StoryPrototype()
    materialize(_config(constraints="No boat leaves after dark."), proto)
    assert proto.meta.constraints == "No boat leaves after dark."
    assert "World rules: No boat leaves after dark." in summarize_snapshot(get_snapshot(proto, 0))


def test_materialize_keeps_last_duplicate_relationship():
    config = _config(relationships=[
        {"src_name": "Mara", "dst_name": "Tobias", "kind": "rivalry", "strength": 0.6},
        {"src_name": "mara", "dst_name": "Tobias", "kind": "rivalry", "strength": 0.9},
    ])
    proto = StoryPrototype()
    materialize(config, proto)
    assert [r.strength for r in proto.relationships] == [0.9]


def test_materialize_rejects_non_empty_prototype():
    proto = StoryPrototype()
    add_character(proto, "Elin", {}, 0)
    with pytest.raises(NonEmptyPrototype):
        materialize(_config(), proto)


def test_materialize_rolls_back_on_failure():
    config = InitialConfig.model_construct(
        title="T", background="", environment="", long_term_goal="g",
        characters=[CharacterDraft(name="Mara"), CharacterDraft(name="Tobias")],
        relationships=[RelationshipDraft.model_construct(
            src_name="Mara", dst_name="Tobias", kind="rivalry", strength=3.0, direction="mutual",
        )],
    )
    proto = StoryPrototype()
    with pytest.raises(ValueError):
        materialize(config, proto)
    assert proto.is_empty()
    assert proto.head_chapter == -1
