"""Story Prototype mutations: characters, relationships, scenes, events, snapshots.

Every mutation names the chapter it belongs to and must target the open chapter
(head_chapter + 1). Sealed chapters never change, so a snapshot always equals a
replay of the mutations labelled ≤ its chapter.
"""

import logging
from bisect import bisect_right
from collections.abc import Iterable, Mapping
from datetime import datetime, timezone

from .core import (
    ChapterSnapshot,
    CharacterNode,
    DuplicateName,
    EmptyParticipants,
    EventNode,
    InvalidChapter,
    InvalidRelationship,
    NonMonotoneChapter,
    OutOfOrderSnapshot,
    Participation,
    PrototypeMeta,
    RelationshipVersion,
    SceneNode,
    SnapshotMark,
    StoryPrototype,
    StrengthOutOfRange,
    UnknownCharacter,
    UnknownScene,
    is_valid_kind,
)

logger = logging.getLogger(__name__)


def _require_open_chapter(proto: StoryPrototype, chapter: int) -> None:
    if chapter != proto.open_chapter:
        if chapter > proto.open_chapter:
            raise InvalidChapter(f"Chapter {chapter} is ahead of the open chapter {proto.open_chapter}")
        raise InvalidChapter(f"Chapter {chapter} is sealed (head is {proto.head_chapter})")


def _require_character(proto: StoryPrototype, character_id: str) -> CharacterNode:
    char = proto.character(character_id)
    if char is None:
        raise UnknownCharacter(f"Unknown character: {character_id}")
    return char


def set_meta(proto: StoryPrototype, **fields: str) -> PrototypeMeta:
    """Replace prototype meta fields (title, background, environment, long_term_goal, constraints)."""
    proto.meta = proto.meta.model_copy(update=fields)
    return proto.meta


def add_character(
    proto: StoryPrototype, name: str, static_attrs: Mapping[str, str] | None, chapter: int
) -> str:
    """Insert a character node and return its id (c1, c2, ...)."""
    name = (name or "").strip()
    if not name:
        raise ValueError("Character name must not be empty")
    if proto.character_by_name(name) is not None:
        raise DuplicateName(f"Character name already present: {name}")
    _require_open_chapter(proto, chapter)
    char = CharacterNode(
        id=f"c{len(proto.characters) + 1}",
        name=name,
        static_attrs={str(k): str(v) for k, v in (static_attrs or {}).items()},
        created_chapter=chapter,
    )
    proto.append_character(char)
    return char.id


def upsert_relationship(
    proto: StoryPrototype,
    src: str,
    dst: str,
    kind: str,
    strength: float,
    direction: str,
    chapter: int,
) -> RelationshipVersion:
    """Append a new relationship version for (src, dst, kind); earlier versions stay."""
    _require_character(proto, src)
    _require_character(proto, dst)
    if src == dst:
        raise InvalidRelationship(f"Self-referencing relationship on {src}")
    if not is_valid_kind(kind):
        raise InvalidRelationship(f"Unknown relationship kind: {kind}")
    if not 0.0 <= strength <= 1.0:
        raise StrengthOutOfRange(f"Strength {strength} outside [0, 1]")
    if direction not in ("directed", "mutual"):
        raise InvalidRelationship(f"Unknown direction: {direction}")
    latest = proto.latest_version((src, dst, kind))
    if latest is not None and chapter <= latest.chapter:
        raise NonMonotoneChapter(
            f"{src}->{dst} ({kind}) already has a version at chapter {latest.chapter}"
        )
    _require_open_chapter(proto, chapter)
    version = RelationshipVersion(
        src=src, dst=dst, kind=kind, strength=float(strength), direction=direction, chapter=chapter,
    )
    proto.append_relationship(version)
    return version


def find_scene(proto: StoryPrototype, location: str, time_label: str) -> SceneNode | None:
    """Scene with exactly this location and time label, if any."""
    for scene in proto.scenes:
        if scene.location == location and scene.time_label == time_label:
            return scene
    return None


def add_scene(
    proto: StoryPrototype, location: str, time_label: str, environment: str, chapter: int
) -> str:
    _require_open_chapter(proto, chapter)
    scene = SceneNode(
        id=f"s{len(proto.scenes) + 1}",
        location=location.strip(),
        time_label=time_label.strip(),
        environment=environment,
        created_chapter=chapter,
    )
    proto.append_scene(scene)
    return scene.id


def add_event(
    proto: StoryPrototype,
    chapter: int,
    description: str,
    consequences: Iterable[str],
    participants: Iterable[Participation],
    scene: str,
) -> str:
    """Insert an event with its IN_EVENT participations and OCCURRED_IN scene link."""
    participants = tuple(participants)
    if not proto.has_scene(scene):
        raise UnknownScene(f"Unknown scene: {scene}")
    if not participants:
        raise EmptyParticipants("Event needs at least one participant")
    for part in participants:
        _require_character(proto, part.character)
    _require_open_chapter(proto, chapter)
    event = EventNode(
        id=f"e{len(proto.events) + 1}",
        chapter=chapter,
        description=description,
        consequences=tuple(consequences),
        scene=scene,
        participants=participants,
    )
    proto.events.append(event)
    return event.id


def freeze(proto: StoryPrototype, chapter: int, created_at: datetime) -> ChapterSnapshot:
    """Replay: the snapshot of everything labelled ≤ chapter, filtered from the stores."""
    return ChapterSnapshot(
        chapter=chapter,
        meta=proto.meta,
        characters=tuple(c for c in proto.characters if c.created_chapter <= chapter),
        relationships=tuple(r for r in proto.relationships if r.chapter <= chapter),
        events=tuple(e for e in proto.events if e.chapter <= chapter),
        scenes=tuple(s for s in proto.scenes if s.created_chapter <= chapter),
        created_at=created_at,
    )


def mark_chapter(
    proto: StoryPrototype, chapter: int, created_at: datetime, meta: PrototypeMeta | None = None
) -> SnapshotMark:
    """Record the store prefixes holding everything labelled ≤ chapter."""
    return SnapshotMark(
        chapter=chapter,
        meta=proto.meta if meta is None else meta,
        created_at=created_at,
        characters=bisect_right(proto.characters, chapter, key=lambda c: c.created_chapter),
        relationships=bisect_right(proto.relationships, chapter, key=lambda r: r.chapter),
        events=bisect_right(proto.events, chapter, key=lambda e: e.chapter),
        scenes=bisect_right(proto.scenes, chapter, key=lambda s: s.created_chapter),
    )


def snapshot_chapter(proto: StoryPrototype, chapter: int) -> ChapterSnapshot:
    """Seal the open chapter: store its mark and advance head_chapter."""
    if chapter != proto.open_chapter:
        raise OutOfOrderSnapshot(
            f"Snapshot {chapter} requested but the next snapshot is {proto.open_chapter}"
        )
    mark = mark_chapter(proto, chapter, datetime.now(timezone.utc))
    proto.snapshots[chapter] = mark
    proto.head_chapter = chapter
    logger.debug(f"Snapshot {chapter}: {mark.characters} characters, {mark.events} events")
    return get_snapshot(proto, chapter)


def get_snapshot(proto: StoryPrototype, chapter: int) -> ChapterSnapshot:
    mark = proto.snapshots.get(chapter)
    if mark is None:
        raise InvalidChapter(f"No snapshot for chapter {chapter} (head is {proto.head_chapter})")
    # elements were validated on insert
    return ChapterSnapshot.model_construct(
        chapter=mark.chapter,
        meta=mark.meta,
        characters=tuple(proto.characters[:mark.characters]),
        relationships=tuple(proto.relationships[:mark.relationships]),
        events=tuple(proto.events[:mark.events]),
        scenes=tuple(proto.scenes[:mark.scenes]),
        created_at=mark.created_at,
    )
