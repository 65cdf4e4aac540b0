"""Tests for chapter generation: goals, PlotWeave, scoring, commit, exit and the loop."""

import json

import pytest

from storyengine.pipeline import (
    EmptyCandidateSet,
    EventDraft,
    ExitCondition,
    GenerationSettings,
    InitialConfig,
    PlotCandidate,
    PlotContribution,
    PreconditionError,
    RuleConfig,
    Rule,
    ScoreCard,
    ShortTermGoal,
    check_exit,
    commit_plot,
    exit_reason,
    materialize,
    plotweave,
    propose_goals,
    run_story,
    score_candidate,
    select_candidate,
    spawn_role_agents,
    with_cap,
)
from storyengine.prototype import InvalidChapter, StoryPrototype, get_snapshot, validate
from storyengine.storage import read_transcript
from storyengine.structured import SchemaViolation

from tests.factories import SETUP, StoryResponder, make_agents


def _story() -> StoryPrototype:
    proto = StoryPrototype()
    materialize(InitialConfig.model_validate(SETUP), proto)
    return proto


def _goal(chapter: int = 1) -> ShortTermGoal:
    return ShortTermGoal(id=f"g{chapter}.1", chapter=chapter, description="Reach the lighthouse")


def _draft(description: str, who=("c1",), location: str = "harbour", changes=()) -> EventDraft:
    return EventDraft.model_validate({
        "description": description,
        "consequences": [f"after {description}"],
        "scene": {"location": location, "time_label": "day 1"},
        "participants": [{"character": c, "emotional_impact": f"impact-of-{c}"} for c in who],
        "relationship_changes": list(changes),
    })


def _candidate(*drafts: EventDraft) -> PlotCandidate:
    return PlotCandidate(
        goal=_goal(),
        contributions=[PlotContribution(author_character="c1", text="Mara sails.")],
        merged_events=list(drafts),
    )


def _settings(**overrides) -> GenerationSettings:
    return GenerationSettings(**{"goals_per_chapter": 2, "rounds": 1, "max_chapters": 3, **overrides})


# ── Goals ────────────────────────────────────────────────


@pytest.mark.asyncio
async def test_propose_goals_resolves_character_names():
    goals = await propose_goals(_story(), 1, 3, make_agents(responder=StoryResponder()))
    assert [g.id for g in goals] == ["g1.1", "g1.2", "g1.3"]
    assert goals[0].characters == ["c1"]
    assert all(g.chapter == 1 for g in goals)


@pytest.mark.asyncio
async def test_propose_goals_wrong_count_is_repaired_then_raised():
    one = json.dumps({"goals": [{"description": "Only one"}]})
    agents = make_agents({"goal": [one, one]})
    with pytest.raises(SchemaViolation):
        await propose_goals(_story(), 1, 2, agents)


@pytest.mark.asyncio
async def test_propose_goals_rejects_unknown_character():
    ghost = json.dumps({"goals": [{"description": "Haunt", "characters": ["Ghost"]}]})
    agents = make_agents({"goal": [ghost]}, responder=StoryResponder())
    goals = await propose_goals(_story(), 1, 1, agents)
    assert goals[0].description == "Path 1 toward the lighthouse"


@pytest.mark.asyncio
async def test_propose_goals_needs_positive_k():
    with pytest.raises(PreconditionError):
        await propose_goals(_story(), 1, 0, make_agents())


# ── Role agents and PlotWeave ────────────────────────────


def test_spawn_role_agents_one_per_character():
    agents = spawn_role_agents(_story(), 1)
    assert [a.character.id for a in agents] == ["c1", "c2"]
    assert agents[0].view.chapter == 0
    assert all("c1" in (r.src, r.dst) for r in agents[0].view.relationships)


@pytest.mark.asyncio
async def test_plotweave_relay_rotation():
    proto = _story()
    responder = StoryResponder()
    candidate = await plotweave(_goal(), spawn_role_agents(proto, 1), 2, make_agents(responder=responder))
    assert [c.author_character for c in candidate.contributions] == ["c1", "c2", "c1", "c2"]
    assert len(candidate.merged_events) == 4
    assert responder.calls == {"role": 4}
    assert candidate.text.startswith("[c1] c1 takes turn 1.")


@pytest.mark.asyncio
async def test_plotweave_passes_earlier_contributions(tmp_path):
    transcript = tmp_path / "transcript.ndjson"
    agents = make_agents(responder=StoryResponder(), transcript=transcript)
    await plotweave(_goal(), spawn_role_agents(_story(), 1), 1, agents)
    second = [r for r in read_transcript(transcript)][1]
    assert "- c1: c1 takes turn 1." in second.user


@pytest.mark.asyncio
async def test_plotweave_repairs_event_without_author():
    foreign = json.dumps({"text": "Tobias acts.", "events": [{
        "description": "Tobias alone",
        "scene": {"location": "harbour"},
        "participants": [{"character": "c2", "emotional_impact": "calm"}],
    }]})
    responder = StoryResponder()
    agents = make_agents({"role": [foreign]}, responder=responder)
    candidate = await plotweave(_goal(), spawn_role_agents(_story(), 1), 1, agents)
    assert candidate.contributions[0].proposed_events[0].participants[0].character == "c1"
    assert responder.calls["role"] == 2


@pytest.mark.asyncio
async def test_plotweave_preconditions():
    with pytest.raises(PreconditionError):
        await plotweave(_goal(), [], 1, make_agents())
    with pytest.raises(PreconditionError):
        await plotweave(_goal(), spawn_role_agents(_story(), 1), 0, make_agents())


def test_merged_events_union_participants():
    from storyengine.pipeline.storygen import _merge_events

    contributions = [
        PlotContribution(author_character="c1", text="a", proposed_events=[_draft("The storm", ("c1",))]),
        PlotContribution(author_character="c2", text="b", proposed_events=[_draft(" The storm ", ("c2", "c1"))]),
    ]
    merged = _merge_events(contributions)
    assert len(merged) == 1
    assert [p.character for p in merged[0].participants] == ["c1", "c2"]


# ── Scoring and selection ────────────────────────────────


def test_rule_config_normalizes_weights():
    rules = RuleConfig(story_rules=[Rule(name="foreshadow", weight=1.0)])
    assert sum(r.weight for r in rules.rules) == pytest.approx(1.0)
    assert rules.story_rules[0].weight == pytest.approx(0.5)


def test_rule_config_rejects_duplicates():
    with pytest.raises(ValueError):
        RuleConfig(story_rules=[Rule(name="dramatic_quality")])


@pytest.mark.asyncio
async def test_score_candidate_weighted_total():
    scores = {"logical_coherence": 10, "dramatic_quality": 5, "character_motivation_consistency": 0}
    agents = make_agents({"scorer": [json.dumps({"scores": scores})]})
    card = await score_candidate(_candidate(_draft("x")), RuleConfig(), agents, candidate_index=2)
    assert card.candidate_index == 2
    assert card.total == pytest.approx(0.4 * 10 + 0.3 * 5)


@pytest.mark.asyncio
async def test_score_candidate_missing_rule_is_repaired():
    partial = json.dumps({"scores": {"logical_coherence": 8}})
    agents = make_agents({"scorer": [partial]}, responder=StoryResponder())
    card = await score_candidate(_candidate(_draft("x")), RuleConfig(), agents)
    assert card.total == pytest.approx(7.0)


def test_select_candidate_argmax_lowest_index_on_tie():
    cards = [
        ScoreCard(candidate_index=0, rule_scores={}, total=6.0),
        ScoreCard(candidate_index=1, rule_scores={}, total=8.0),
        ScoreCard(candidate_index=2, rule_scores={}, total=8.0),
    ]
    assert select_candidate(cards) == 1
    with pytest.raises(EmptyCandidateSet):
        select_candidate([])


# ── Commit ───────────────────────────────────────────────


def test_commit_plot_writes_events_and_seals():
    proto = _story()
    commit_plot(proto, 1, _candidate(_draft("Storm", ("c1", "c2")), _draft("Calm", ("c2",))))
    snapshot = get_snapshot(proto, 1)
    assert proto.head_chapter == 1
    assert [e.description for e in snapshot.events] == ["Storm", "Calm"]
    assert len(snapshot.scenes) == 1
    assert validate(proto) == []


def test_commit_plot_one_relationship_version_per_key():
    change = {"src": "c1", "dst": "c2", "kind": "rivalry", "strength": 0.2}
    later = {**change, "strength": 0.9}
    proto = _story()
    commit_plot(proto, 1, _candidate(_draft("A", changes=[change]), _draft("B", changes=[later])))
    versions = [r for r in proto.relationships if r.chapter == 1]
    assert [(r.kind, r.strength) for r in versions] == [("rivalry", 0.9)]


def test_commit_plot_wrong_chapter():
    with pytest.raises(InvalidChapter):
        commit_plot(_story(), 2, _candidate(_draft("A")))


def test_commit_plot_rolls_back_on_failure(monkeypatch):
    def boom(proto, chapter):
        raise RuntimeError("disk on fire")

    proto = _story()
    monkeypatch.setattr("storyengine.pipeline.storygen.snapshot_chapter", boom)
    with pytest.raises(RuntimeError):
        commit_plot(proto, 1, _candidate(_draft("Storm", ("c1", "c2"))))
    assert proto.head_chapter == 0
    assert proto.events == []
    assert proto.scenes == []
    assert validate(proto) == []


def test_commit_plot_rolls_back_unknown_participant():
    proto = _story()
    ghost = _draft("B", ("c1",))
    ghost = ghost.model_copy(update={"participants": ghost.participants + [
        ghost.participants[0].model_copy(update={"character": "c9"})
    ]})
    with pytest.raises(ValueError):
        commit_plot(proto, 1, _candidate(_draft("A"), ghost))
    assert proto.events == []
    assert validate(proto) == []


# ── Exit ─────────────────────────────────────────────────


def test_with_cap_adds_cap_once():
    conditions = with_cap([ExitCondition(kind="llm_judgment")], 5)
    assert conditions[-1].params == {"cap": 5}
    assert with_cap(conditions, 9) == conditions


def test_exit_condition_needs_params():
    with pytest.raises(ValueError):
        ExitCondition(kind="event_count")


@pytest.mark.asyncio
async def test_exit_reason_deterministic_first():
    proto = _story()
    commit_plot(proto, 1, _candidate(_draft("A"), _draft("B")))
    responder = StoryResponder()
    conditions = [ExitCondition(kind="llm_judgment"), ExitCondition(kind="event_count", params={"min_events": 2})]
    assert await exit_reason(proto, conditions, 1, make_agents(responder=responder)) == "event_count"
    assert responder.calls == {}


@pytest.mark.asyncio
async def test_exit_reason_relationship_reached_by_name():
    proto = _story()
    change = {"src": "c1", "dst": "c2", "kind": "alliance", "strength": 0.85}
    commit_plot(proto, 1, _candidate(_draft("A", changes=[change])))
    condition = ExitCondition(
        kind="relationship_reached",
        params={"src": "Mara", "dst": "Tobias", "kind": "alliance", "min_strength": 0.8},
    )
    assert await exit_reason(proto, [condition], 1, make_agents()) == "relationship_reached"


@pytest.mark.asyncio
async def test_exit_reason_llm_judgment():
    proto = _story()
    commit_plot(proto, 1, _candidate(_draft("A")))
    conditions = [ExitCondition(kind="llm_judgment")]
    yes = json.dumps({"achieved": True, "reason": "The keeper is named."})
    assert await exit_reason(proto, conditions, 1, make_agents({"exit": [yes]})) == "llm_judgment"
    assert await exit_reason(proto, conditions, 1, make_agents(responder=StoryResponder())) is None


@pytest.mark.asyncio
async def test_exit_reason_unreadable_judgment_continues():
    proto = _story()
    commit_plot(proto, 1, _candidate(_draft("A")))
    agents = make_agents({"exit": ["maybe", "perhaps"]})
    assert await exit_reason(proto, [ExitCondition(kind="llm_judgment")], 1, agents) is None


@pytest.mark.asyncio
async def test_check_exit_at_cap():
    proto = _story()
    commit_plot(proto, 1, _candidate(_draft("A")))
    conditions = with_cap([ExitCondition(kind="llm_judgment")], 1)
    assert await check_exit(proto, conditions, 1, make_agents())


@pytest.mark.asyncio
async def test_check_exit_judgment_false_below_cap():
    proto = _story()
    commit_plot(proto, 1, _candidate(_draft("A")))
    conditions = with_cap([ExitCondition(kind="llm_judgment")], 5)
    no = json.dumps({"achieved": False, "reason": "Not yet."})
    assert not await check_exit(proto, conditions, 1, make_agents({"exit": [no]}))


@pytest.mark.asyncio
@pytest.mark.parametrize("min_events", [1, 2, 3])
async def test_check_exit_event_count_matches_store(min_events):
    proto = _story()
    commit_plot(proto, 1, _candidate(_draft("A"), _draft("B")))
    condition = ExitCondition(kind="event_count", params={"min_events": min_events})
    expected = sum(1 for e in proto.events if e.chapter <= 1) >= min_events
    assert await check_exit(proto, [condition], 1, make_agents()) == expected


# ── Loop ─────────────────────────────────────────────────


@pytest.mark.asyncio
async def test_run_story_until_cap():
    proto = _story()
    responder = StoryResponder()
    committed = []
    summary = await run_story(
        proto, _settings(), make_agents(responder=responder), on_commit=lambda p, c: committed.append(c)
    )
    assert summary.exit_reason == "max_chapters"
    assert summary.chapters_produced == 3
    assert summary.head_chapter == 3
    assert committed == [1, 2, 3]
    assert responder.calls == {"goal": 3, "role": 12, "scorer": 6, "exit": 2}
    assert validate(proto) == []


@pytest.mark.asyncio
async def test_run_story_stops_on_llm_judgment():
    yes = json.dumps({"achieved": True, "reason": "done"})
    agents = make_agents({"exit": [yes]}, responder=StoryResponder())
    summary = await run_story(_story(), _settings(max_chapters=10), agents)
    assert summary.exit_reason == "llm_judgment"
    assert summary.head_chapter == 1


@pytest.mark.asyncio
async def test_run_story_at_cap_does_nothing():
    proto = _story()
    responder = StoryResponder()
    await run_story(proto, _settings(max_chapters=1), make_agents(responder=responder))
    responder.calls.clear()
    summary = await run_story(proto, _settings(max_chapters=1), make_agents(responder=responder))
    assert summary.chapters_produced == 0
    assert responder.calls == {}


@pytest.mark.asyncio
async def test_run_story_needs_snapshot_zero():
    with pytest.raises(PreconditionError):
        await run_story(StoryPrototype(), _settings(), make_agents())


@pytest.mark.asyncio
async def test_run_story_failure_keeps_last_commit():
    class FailsInChapterTwo(StoryResponder):
        def _role(self, request):
            if request.chapter == 2:
                raise RuntimeError("backend died")
            return super()._role(request)

    proto = _story()
    with pytest.raises(RuntimeError):
        await run_story(proto, _settings(), make_agents(responder=FailsInChapterTwo()))
    assert proto.head_chapter == 1
    assert all(e.chapter <= 1 for e in proto.events)
    assert validate(proto) == []


@pytest.mark.asyncio
async def test_role_prompts_never_leak_other_impacts(tmp_path):
    transcript = tmp_path / "transcript.ndjson"
    await run_story(_story(), _settings(), make_agents(responder=StoryResponder(), transcript=transcript))
    role_prompts = [r for r in read_transcript(transcript) if r.tag == "role"]
    assert role_prompts
    for record in role_prompts:
        author = "c1" if "[c1], one voice" in record.user else "c2"
        other = "c2" if author == "c1" else "c1"
        assert f"impact-of-{other}-" not in record.user
    later = [r for r in role_prompts if r.chapter == 3 and "[c1], one voice" in r.user]
    assert "you felt: impact-of-c1-turn-" in later[0].user
