"""Read-only prototype queries: limited-cognition views, histories, plot chains, summaries.

limited_view(proto, c, k) exposes, from snapshot k, only what character c could
know: its own node, relationship versions incident to it, the events it took
part in (its own Participation plus co-participant ids and the shared
description/consequences), the scenes of those events, and the background and
long-term goal. Co-participants' emotional impacts never appear.
"""

from pydantic import BaseModel, ConfigDict

from .core import (
    ChapterSnapshot,
    CharacterNode,
    EventNode,
    InvalidChapter,
    InvalidRange,
    Participation,
    RelationshipVersion,
    SceneNode,
    StoryPrototype,
    UnknownCharacter,
)
from .graph import get_snapshot


class ObservedEvent(BaseModel):
    """An event as seen by one participant."""

    model_config = ConfigDict(frozen=True)

    id: str
    chapter: int
    description: str
    consequences: tuple[str, ...]
    scene: str
    own: Participation
    co_participants: tuple[str, ...]


class LimitedView(BaseModel):
    model_config = ConfigDict(frozen=True)

    chapter: int
    character: CharacterNode
    relationships: tuple[RelationshipVersion, ...]
    events: tuple[ObservedEvent, ...]
    scenes: tuple[SceneNode, ...]
    background: str
    long_term_goal: str


def _observe(event: EventNode, character_id: str) -> ObservedEvent | None:
    own = None
    others: list[str] = []
    for part in event.participants:
        if part.character == character_id:
            own = part
        else:
            others.append(part.character)
    if own is None:
        return None
    return ObservedEvent(
        id=event.id,
        chapter=event.chapter,
        description=event.description,
        consequences=event.consequences,
        scene=event.scene,
        own=own,
        co_participants=tuple(others),
    )


def view_of_snapshot(snapshot: ChapterSnapshot, character_id: str) -> LimitedView:
    char = snapshot.character(character_id)
    if char is None:
        raise UnknownCharacter(f"Character {character_id} not in snapshot {snapshot.chapter}")
    relationships = tuple(
        r for r in snapshot.relationships if character_id in (r.src, r.dst)
    )
    events: list[ObservedEvent] = []
    scene_ids: list[str] = []
    for event in snapshot.events:
        observed = _observe(event, character_id)
        if observed is None:
            continue
        events.append(observed)
        if event.scene not in scene_ids:
            scene_ids.append(event.scene)
    scenes = tuple(s for s in snapshot.scenes if s.id in scene_ids)
    return LimitedView(
        chapter=snapshot.chapter,
        character=char,
        relationships=relationships,
        events=tuple(events),
        scenes=scenes,
        background=snapshot.meta.background,
        long_term_goal=snapshot.meta.long_term_goal,
    )


def limited_view(proto: StoryPrototype, character: str, chapter: int) -> LimitedView:
    """The subgraph of snapshot `chapter` that `character` is allowed to see."""
    if proto.character(character) is None:
        raise UnknownCharacter(f"Unknown character: {character}")
    if chapter < 0 or chapter > proto.head_chapter:
        raise InvalidChapter(f"Chapter {chapter} outside 0..{proto.head_chapter}")
    return view_of_snapshot(get_snapshot(proto, chapter), character)


def relationship_history(proto: StoryPrototype, src: str, dst: str) -> list[RelationshipVersion]:
    """All versions from src to dst across kinds, sorted by (kind, chapter)."""
    for character_id in (src, dst):
        if proto.character(character_id) is None:
            raise UnknownCharacter(f"Unknown character: {character_id}")
    history = [r for r in proto.relationships if r.src == src and r.dst == dst]
    return sorted(history, key=lambda r: (r.kind, r.chapter))


def relationship_at(
    versions: tuple[RelationshipVersion, ...] | list[RelationshipVersion],
    src: str,
    dst: str,
    kind: str,
    chapter: int,
) -> RelationshipVersion | None:
    """Latest version of (src, dst, kind) effective at `chapter`."""
    found = None
    for version in versions:
        if version.key == (src, dst, kind) and version.chapter <= chapter:
            if found is None or version.chapter > found.chapter:
                found = version
    return found


def latest_relationships(
    versions: tuple[RelationshipVersion, ...] | list[RelationshipVersion],
) -> list[RelationshipVersion]:
    """Latest version per (src, dst, kind), in first-appearance order."""
    latest: dict[tuple[str, str, str], RelationshipVersion] = {}
    for version in versions:
        current = latest.get(version.key)
        if current is None or version.chapter > current.chapter:
            latest[version.key] = version
    return list(latest.values())


def plot_chain(proto: StoryPrototype, from_chapter: int, to_chapter: int) -> list[EventNode]:
    """Events with from ≤ chapter ≤ to, ordered by (chapter, insertion order)."""
    if from_chapter < 0 or from_chapter > to_chapter or to_chapter > proto.head_chapter:
        raise InvalidRange(
            f"Invalid chapter range {from_chapter}..{to_chapter} (head is {proto.head_chapter})"
        )
    chain = [e for e in proto.events if from_chapter <= e.chapter <= to_chapter]
    # stable sort keeps insertion order within a chapter
    return sorted(chain, key=lambda e: e.chapter)


# ── Prompt digests ───────────────────────────────────────


def _names(snapshot: ChapterSnapshot) -> dict[str, str]:
    return {c.id: c.name for c in snapshot.characters}


def summarize_snapshot(snapshot: ChapterSnapshot, chapter: int | None = None) -> str:
    """Deterministic text digest of a snapshot for goal, exit and plan prompts.

    Lists characters, the latest relationship per (src, dst, kind), and the
    events of `chapter` (default: the snapshot's own chapter).
    """
    chapter = snapshot.chapter if chapter is None else chapter
    names = _names(snapshot)
    lines = [f"Title: {snapshot.meta.title}", f"Background: {snapshot.meta.background}"]
    if snapshot.meta.environment and snapshot.meta.environment != snapshot.meta.background:
        lines.append(f"Environment: {snapshot.meta.environment}")
    lines.append(f"Long-term goal: {snapshot.meta.long_term_goal}")
    if snapshot.meta.constraints:
        lines.append(f"World rules: {snapshot.meta.constraints}")
    lines.append("")
    lines.append("Characters:")
    for char in snapshot.characters:
        attrs = ", ".join(f"{k}: {v}" for k, v in char.static_attrs.items())
        lines.append(f"- {char.name} [{char.id}]" + (f" ({attrs})" if attrs else ""))
    relationships = latest_relationships(snapshot.relationships)
    if relationships:
        lines.append("")
        lines.append("Relationships:")
        for rel in relationships:
            arrow = "<->" if rel.direction == "mutual" else "->"
            lines.append(
                f"- {names.get(rel.src, rel.src)} {arrow} {names.get(rel.dst, rel.dst)}: "
                f"{rel.kind} {rel.strength:.2f} (since chapter {rel.chapter})"
            )
    events = [e for e in snapshot.events if e.chapter == chapter]
    if events:
        lines.append("")
        lines.append(f"Events of chapter {chapter}:")
        for event in events:
            scene = snapshot.scene(event.scene)
            where = f" @ {scene.location}" if scene else ""
            who = ", ".join(names.get(p.character, p.character) for p in event.participants)
            lines.append(f"- [{event.id}] {event.description}{where} ({who})")
            for consequence in event.consequences:
                lines.append(f"    consequence: {consequence}")
    return "\n".join(lines)


def describe_view(view: LimitedView, event_limit: int = 20) -> str:
    """Render a limited view as prompt text, keeping only the latest `event_limit` events."""
    char = view.character
    attrs = ", ".join(f"{k}: {v}" for k, v in char.static_attrs.items())
    lines = [f"You are {char.name} [{char.id}]" + (f" ({attrs})" if attrs else "") + "."]
    lines.append(f"Background: {view.background}")
    lines.append(f"Long-term goal of the story: {view.long_term_goal}")
    relationships = latest_relationships(view.relationships)
    if relationships:
        lines.append("")
        lines.append("Your relationships:")
        for rel in relationships:
            other = rel.dst if rel.src == char.id else rel.src
            lines.append(f"- with [{other}]: {rel.kind} {rel.strength:.2f} ({rel.direction})")
    events = view.events[-event_limit:] if event_limit > 0 else ()
    if events:
        scenes = {s.id: s for s in view.scenes}
        lines.append("")
        lines.append("What you lived through:")
        for event in events:
            scene = scenes.get(event.scene)
            where = f" @ {scene.location}" if scene else ""
            with_whom = ", ".join(f"[{c}]" for c in event.co_participants)
            lines.append(
                f"- chapter {event.chapter}{where}: {event.description}"
                + (f" (with {with_whom})" if with_whom else "")
            )
            lines.append(
                f"    you felt: {event.own.emotional_impact} ({event.own.impact_intensity:+.2f})"
            )
    return "\n".join(lines)
