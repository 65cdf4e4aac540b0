"""Chapter generation loop.

One cycle per chapter:
  1. propose_goals       k short-term goals from the previous snapshot
  2. spawn_role_agents   one role agent per character, bound to its limited view
  3. plotweave           per goal, agents extend the plot in a fixed relay rotation
  4. score_candidate     judge each woven candidate against the rule set
  5. select_candidate    argmax total, lowest index on ties
  6. commit_plot         scenes, events and relationship versions, then the snapshot
  7. check_exit          deterministic conditions first, then the model judgment

Candidates (one per goal) only read immutable snapshot views, so on a
concurrent backend they are woven and scored with asyncio.gather; commit is
always serialized on the single prototype writer.
"""

import asyncio
import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, field_validator, model_validator

from storyengine.agents import Agents
from storyengine.prototype import (
    CharacterNode,
    InvalidChapter,
    LimitedView,
    Participation,
    StoryPrototype,
    add_event,
    add_scene,
    describe_view,
    find_scene,
    get_snapshot,
    relationship_at,
    snapshot_chapter,
    summarize_snapshot,
    upsert_relationship,
    view_of_snapshot,
)
from storyengine.prototype.core import is_valid_kind
from storyengine.structured import Score, SchemaViolation, StructuredOutputError

from .core import EmptyCandidateSet, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_GOALS_PER_CHAPTER = 3
DEFAULT_ROUNDS = 2


# ── Goals ────────────────────────────────────────────────


class ShortTermGoal(BaseModel):
    id: str
    chapter: int
    description: str = Field(min_length=1)
    rationale: str = ""
    characters: list[str] = Field(default_factory=list)


class _GoalDraft(BaseModel):
    description: str = Field(min_length=1)
    rationale: str = ""
    characters: list[str] = Field(default_factory=list)


class _GoalReply(BaseModel):
    goals: list[_GoalDraft]


# ── Plot drafts ──────────────────────────────────────────


class SceneDraft(BaseModel):
    location: str = Field(min_length=1)
    time_label: str = ""
    environment: str = ""

    @field_validator("location", "time_label")
    @classmethod
    def _strip(cls, v: str) -> str:
        return v.strip()


class RelationshipChange(BaseModel):
    src: str
    dst: str
    kind: str
    strength: float = Field(ge=0.0, le=1.0)
    direction: Literal["directed", "mutual"] = "mutual"


class EventDraft(BaseModel):
    description: str = Field(min_length=1)
    consequences: list[str] = Field(default_factory=list)
    scene: SceneDraft
    participants: list[Participation] = Field(min_length=1)
    relationship_changes: list[RelationshipChange] = Field(default_factory=list)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.description.strip(), self.scene.location, self.scene.time_label)


class PlotContribution(BaseModel):
    author_character: str
    text: str = Field(min_length=1)
    proposed_events: list[EventDraft] = Field(default_factory=list)


class _ContributionReply(BaseModel):
    text: str = Field(min_length=1)
    events: list[EventDraft] = Field(default_factory=list)


class PlotCandidate(BaseModel):
    goal: ShortTermGoal
    contributions: list[PlotContribution] = Field(min_length=1)
    merged_events: list[EventDraft] = Field(default_factory=list)

    @property
    def text(self) -> str:
        return "\n".join(f"[{c.author_character}] {c.text}" for c in self.contributions)


# ── Rules and scoring ────────────────────────────────────


class Rule(BaseModel):
    name: str = Field(min_length=1)
    description: str = ""
    weight: PositiveFloat = 1.0


DEFAULT_GENERAL_RULES = [
    Rule(
        name="logical_coherence",
        description="Events follow from the story so far without contradiction.",
        weight=0.4,
    ),
    Rule(
        name="dramatic_quality",
        description="The plot carries tension, stakes and a turn worth reading.",
        weight=0.3,
    ),
    Rule(
        name="character_motivation_consistency",
        description="Every character acts from motives the story has established.",
        weight=0.3,
    ),
]


class RuleConfig(BaseModel):
    """General and story-specific judging rules; weights are normalized to sum 1 at load."""

    model_config = ConfigDict(extra="forbid")

    general_rules: list[Rule] = Field(default_factory=lambda: [r.model_copy() for r in DEFAULT_GENERAL_RULES])
    story_rules: list[Rule] = Field(default_factory=list)

    @model_validator(mode="after")
    def _normalize(self) -> "RuleConfig":
        rules = self.general_rules + self.story_rules
        if not rules:
            raise ValueError("at least one rule is required")
        names = [r.name for r in rules]
        if len(set(names)) != len(names):
            raise ValueError("rule names must be unique")
        total = sum(r.weight for r in rules)
        self.general_rules = [r.model_copy(update={"weight": r.weight / total}) for r in self.general_rules]
        self.story_rules = [r.model_copy(update={"weight": r.weight / total}) for r in self.story_rules]
        return self

    @property
    def rules(self) -> list[Rule]:
        return self.general_rules + self.story_rules


def load_rules(path: Path | None) -> RuleConfig:
    if path is None:
        return RuleConfig()
    return RuleConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))


class ScoreCard(BaseModel):
    candidate_index: int
    rule_scores: dict[str, float]
    total: float


class _ScoreReply(BaseModel):
    scores: dict[str, Score]


# ── Exit conditions ──────────────────────────────────────


class ExitCondition(BaseModel):
    """kind → params:
    llm_judgment          {}
    max_chapters          {"cap": int}
    event_count           {"min_events": int}
    relationship_reached  {"src", "dst", "kind", "min_strength"}  (names or ids)
    """

    kind: Literal["llm_judgment", "max_chapters", "event_count", "relationship_reached"]
    params: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _params_present(self) -> "ExitCondition":
        required = {
            "llm_judgment": (),
            "max_chapters": ("cap",),
            "event_count": ("min_events",),
            "relationship_reached": ("src", "dst", "kind", "min_strength"),
        }[self.kind]
        missing = [p for p in required if p not in self.params]
        if missing:
            raise ValueError(f"{self.kind} needs params {missing}")
        return self


class _ExitReply(BaseModel):
    achieved: bool
    reason: str = ""


def with_cap(conditions: list[ExitCondition], max_chapters: int) -> list[ExitCondition]:
    """The active set always carries a max_chapters safety cap."""
    if any(c.kind == "max_chapters" for c in conditions):
        return list(conditions)
    return [*conditions, ExitCondition(kind="max_chapters", params={"cap": max_chapters})]


# ── Goals ────────────────────────────────────────────────


def _resolve(snapshot_chars: tuple[CharacterNode, ...], ref: str) -> str | None:
    ref = ref.strip().strip("[]")
    for char in snapshot_chars:
        if char.id == ref or char.name.lower() == ref.lower():
            return char.id
    return None


async def propose_goals(proto: StoryPrototype, chapter: int, k: int, agents: Agents) -> list[ShortTermGoal]:
    if k < 1:
        raise PreconditionError(f"Goals per chapter must be positive, got {k}")
    snapshot = get_snapshot(proto, chapter - 1)

    def check(reply: _GoalReply) -> None:
        if len(reply.goals) != k:
            raise SchemaViolation(f"Expected exactly {k} goals, got {len(reply.goals)}")
        for goal in reply.goals:
            for ref in goal.characters:
                if _resolve(snapshot.characters, ref) is None:
                    raise SchemaViolation(f"Goal mentions unknown character '{ref}'")

    reply = await agents.structured(
        "goal",
        {
            "k": k,
            "summary": summarize_snapshot(snapshot),
            "long_term_goal": snapshot.meta.long_term_goal,
            "character_names": ", ".join(c.name for c in snapshot.characters),
        },
        _GoalReply,
        check,
        chapter=chapter,
    )
    return [
        ShortTermGoal(
            id=f"g{chapter}.{i + 1}",
            chapter=chapter,
            description=draft.description,
            rationale=draft.rationale,
            characters=[_resolve(snapshot.characters, ref) for ref in draft.characters],
        )
        for i, draft in enumerate(reply.goals)
    ]


# ── Role agents and PlotWeave ────────────────────────────


@dataclass(frozen=True)
class RoleAgent:
    """A character bound to what it can see; it never reads the prototype itself."""

    character: CharacterNode
    view: LimitedView


def spawn_role_agents(proto: StoryPrototype, chapter: int) -> list[RoleAgent]:
    """One agent per character alive in snapshot chapter-1, in insertion order."""
    snapshot = get_snapshot(proto, chapter - 1)
    return [RoleAgent(char, view_of_snapshot(snapshot, char.id)) for char in snapshot.characters]


def _merge_events(contributions: list[PlotContribution]) -> list[EventDraft]:
    """De-duplicate drafts by (description, scene); participants and consequences are unioned."""
    merged: dict[tuple[str, str, str], EventDraft] = {}
    for contribution in contributions:
        for draft in contribution.proposed_events:
            current = merged.get(draft.key)
            if current is None:
                merged[draft.key] = draft
                continue
            seen = {p.character for p in current.participants}
            participants = current.participants + [p for p in draft.participants if p.character not in seen]
            consequences = current.consequences + [c for c in draft.consequences if c not in current.consequences]
            merged[draft.key] = current.model_copy(update={
                "participants": participants,
                "consequences": consequences,
                "relationship_changes": current.relationship_changes + draft.relationship_changes,
            })
    return list(merged.values())


async def plotweave(
    goal: ShortTermGoal,
    role_agents: list[RoleAgent],
    rounds: int,
    agents: Agents,
    view_event_limit: int = 20,
) -> PlotCandidate:
    if not role_agents:
        raise PreconditionError("PlotWeave needs at least one role agent")
    if rounds < 1:
        raise PreconditionError(f"Rounds must be positive, got {rounds}")
    known = {a.character.id for a in role_agents}
    contributions: list[PlotContribution] = []

    for _ in range(rounds):
        for role in role_agents:
            author = role.character.id

            def check(reply: _ContributionReply, author: str = author) -> None:
                for event in reply.events:
                    ids = [p.character for p in event.participants]
                    if author not in ids:
                        raise SchemaViolation(f"Event '{event.description[:40]}' must include {author}")
                    unknown = [i for i in ids if i not in known]
                    if unknown:
                        raise SchemaViolation(f"Unknown participant ids {unknown}")
                    if len(set(ids)) != len(ids):
                        raise SchemaViolation("A character appears twice among participants")
                    for change in event.relationship_changes:
                        if change.src not in known or change.dst not in known:
                            raise SchemaViolation(f"Relationship change names unknown ids {change.src}, {change.dst}")
                        if change.src == change.dst:
                            raise SchemaViolation(f"Relationship change of {change.src} with itself")
                        if not is_valid_kind(change.kind):
                            raise SchemaViolation(f"Unknown relationship kind {change.kind}")

            reply = await agents.structured(
                "role",
                {
                    "character_name": role.character.name,
                    "character_id": author,
                    "chapter": goal.chapter,
                    "goal": goal.description,
                    "view": describe_view(role.view, view_event_limit),
                    "contributions": [
                        {"author": c.author_character, "text": c.text} for c in contributions
                    ],
                },
                _ContributionReply,
                check,
                chapter=goal.chapter,
            )
            contributions.append(
                PlotContribution(author_character=author, text=reply.text, proposed_events=reply.events)
            )

    return PlotCandidate(goal=goal, contributions=contributions, merged_events=_merge_events(contributions))


# ── Scoring and selection ────────────────────────────────


def _describe_events(candidate: PlotCandidate) -> str:
    lines = []
    for event in candidate.merged_events:
        who = ", ".join(p.character for p in event.participants)
        lines.append(f"- {event.description} @ {event.scene.location} ({who})")
    return "\n".join(lines) or "(none)"


async def score_candidate(
    candidate: PlotCandidate,
    rules: RuleConfig,
    agents: Agents,
    candidate_index: int = 0,
    summary: str = "",
) -> ScoreCard:
    names = [r.name for r in rules.rules]

    def check(reply: _ScoreReply) -> None:
        missing = [n for n in names if n not in reply.scores]
        if missing:
            raise SchemaViolation(f"Missing scores for rules {missing}")

    reply = await agents.structured(
        "scorer",
        {
            "goal": candidate.goal.description,
            "plot": candidate.text,
            "events": _describe_events(candidate),
            "rules": [{"name": r.name, "description": r.description} for r in rules.rules],
            "summary": summary,
        },
        _ScoreReply,
        check,
        chapter=candidate.goal.chapter,
    )
    rule_scores = {n: reply.scores[n] for n in names}
    total = sum(r.weight * rule_scores[r.name] for r in rules.rules)
    return ScoreCard(candidate_index=candidate_index, rule_scores=rule_scores, total=total)


def select_candidate(cards: list[ScoreCard]) -> int:
    if not cards:
        raise EmptyCandidateSet("No candidates to select from")
    return min(cards, key=lambda c: (-c.total, c.candidate_index)).candidate_index


# ── Commit ───────────────────────────────────────────────


def commit_plot(proto: StoryPrototype, chapter: int, candidate: PlotCandidate) -> None:
    """Write the winning candidate at `chapter` and seal it. All-or-nothing."""
    if chapter != proto.open_chapter:
        raise InvalidChapter(f"Commit targets chapter {chapter} but the open chapter is {proto.open_chapter}")
    cp = proto.checkpoint()
    try:
        changes: dict[tuple[str, str, str], RelationshipChange] = {}
        for draft in candidate.merged_events:
            scene = find_scene(proto, draft.scene.location, draft.scene.time_label)
            if scene is not None:
                scene_id = scene.id
            else:
                scene_id = add_scene(
                    proto, draft.scene.location, draft.scene.time_label, draft.scene.environment, chapter
                )
            add_event(proto, chapter, draft.description, draft.consequences, draft.participants, scene_id)
            for change in draft.relationship_changes:
                changes[(change.src, change.dst, change.kind)] = change
        # one version per (src, dst, kind) per chapter; the last draft wins
        for change in changes.values():
            upsert_relationship(
                proto, change.src, change.dst, change.kind, change.strength, change.direction, chapter
            )
        snapshot_chapter(proto, chapter)
    except Exception:
        proto.rollback(cp)
        raise
    logger.info(
        f"Committed chapter {chapter}: goal '{candidate.goal.description[:60]}', "
        f"{len(candidate.merged_events)} events"
    )


# ── Exit ─────────────────────────────────────────────────


def _holds(proto: StoryPrototype, condition: ExitCondition, chapter: int) -> bool:
    snapshot = get_snapshot(proto, chapter)
    params = condition.params
    if condition.kind == "max_chapters":
        return chapter >= int(params["cap"])
    if condition.kind == "event_count":
        return len(snapshot.events) >= int(params["min_events"])
    if condition.kind == "relationship_reached":
        src = _resolve(snapshot.characters, str(params["src"]))
        dst = _resolve(snapshot.characters, str(params["dst"]))
        if src is None or dst is None:
            return False
        version = relationship_at(snapshot.relationships, src, dst, str(params["kind"]), chapter)
        return version is not None and version.strength >= float(params["min_strength"])
    return False


async def exit_reason(
    proto: StoryPrototype, conditions: list[ExitCondition], chapter: int, agents: Agents
) -> str | None:
    """Kind of the first condition that holds, or None to continue."""
    snapshot = get_snapshot(proto, chapter)
    for condition in conditions:
        if condition.kind != "llm_judgment" and _holds(proto, condition, chapter):
            return condition.kind
    if not any(c.kind == "llm_judgment" for c in conditions):
        return None
    try:
        reply = await agents.structured(
            "exit",
            {
                "chapter": chapter,
                "long_term_goal": snapshot.meta.long_term_goal,
                "summary": summarize_snapshot(snapshot),
            },
            _ExitReply,
            chapter=chapter,
        )
    except StructuredOutputError as e:
        logger.warning(f"Exit judgment for chapter {chapter} unreadable ({e}); continuing")
        return None
    if reply.achieved:
        logger.info(f"Long-term goal judged achieved at chapter {chapter}: {reply.reason}")
        return "llm_judgment"
    return None


async def check_exit(
    proto: StoryPrototype, conditions: list[ExitCondition], chapter: int, agents: Agents
) -> bool:
    return await exit_reason(proto, conditions, chapter, agents) is not None


# ── Loop ─────────────────────────────────────────────────


class GenerationSettings(BaseModel):
    goals_per_chapter: PositiveInt = DEFAULT_GOALS_PER_CHAPTER
    rounds: PositiveInt = DEFAULT_ROUNDS
    max_chapters: PositiveInt = 10
    rules: RuleConfig = Field(default_factory=RuleConfig)
    exit_conditions: list[ExitCondition] = Field(
        default_factory=lambda: [ExitCondition(kind="llm_judgment")]
    )
    view_event_limit: PositiveInt = 20


class GenerationSummary(BaseModel):
    chapters_produced: int
    exit_reason: str
    head_chapter: int


async def _develop(
    goal: ShortTermGoal,
    index: int,
    role_agents: list[RoleAgent],
    settings: GenerationSettings,
    agents: Agents,
    summary: str,
) -> tuple[PlotCandidate, ScoreCard]:
    candidate = await plotweave(goal, role_agents, settings.rounds, agents, settings.view_event_limit)
    card = await score_candidate(candidate, settings.rules, agents, index, summary)
    return candidate, card


async def run_story(
    proto: StoryPrototype,
    settings: GenerationSettings,
    agents: Agents,
    on_commit: Callable[[StoryPrototype, int], None] | None = None,
) -> GenerationSummary:
    """Generate chapters from head_chapter + 1 until an exit condition holds.

    `on_commit` runs after each sealed chapter (persistence hook). An error
    leaves the prototype at its last committed snapshot.
    """
    if proto.head_chapter < 0:
        raise PreconditionError("The prototype has no snapshot 0; run init first")
    conditions = with_cap(settings.exit_conditions, settings.max_chapters)
    cap = min(int(c.params["cap"]) for c in conditions if c.kind == "max_chapters")
    if proto.head_chapter >= cap:
        return GenerationSummary(chapters_produced=0, exit_reason="max_chapters", head_chapter=proto.head_chapter)

    produced = 0
    while True:
        chapter = proto.open_chapter
        summary = summarize_snapshot(get_snapshot(proto, chapter - 1))
        goals = await propose_goals(proto, chapter, settings.goals_per_chapter, agents)
        role_agents = spawn_role_agents(proto, chapter)

        if agents.concurrent:
            results = await asyncio.gather(*(
                _develop(goal, i, role_agents, settings, agents, summary) for i, goal in enumerate(goals)
            ))
        else:
            results = [
                await _develop(goal, i, role_agents, settings, agents, summary) for i, goal in enumerate(goals)
            ]
        candidates = [candidate for candidate, _ in results]
        cards = [card for _, card in results]
        best = select_candidate(cards)
        logger.info(
            f"Chapter {chapter}: candidate {best} selected "
            f"(totals {', '.join(f'{c.total:.2f}' for c in cards)})"
        )

        commit_plot(proto, chapter, candidates[best])
        produced += 1
        if on_commit is not None:
            on_commit(proto, chapter)

        reason = await exit_reason(proto, conditions, chapter, agents)
        if reason is not None:
            logger.info(f"Generation stopped after chapter {chapter}: {reason}")
            return GenerationSummary(chapters_produced=produced, exit_reason=reason, head_chapter=proto.head_chapter)
