"""Story Prototype node/edge types, the mutable prototype aggregate, and graph errors.

Role Graph:  CharacterNode + RelationshipVersion (append-only, keyed by src/dst/kind)
Plot Graph:  SceneNode + EventNode; Participation is the IN_EVENT edge,
             EventNode.scene the OCCURRED_IN edge.

All nodes and edges are frozen pydantic models. Every element carries the
chapter it became effective in and only the open chapter (head_chapter + 1)
accepts mutations, so each store is ordered by chapter and a sealed chapter is
just a SnapshotMark: the store prefix lengths at that chapter. get_snapshot()
materializes the ChapterSnapshot from the prefixes on demand.
"""

from dataclasses import dataclass, field
from datetime import datetime
from typing import Literal, NamedTuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

RELATIONSHIP_KINDS = ("kinship", "romantic", "rivalry", "alliance")

Direction = Literal["directed", "mutual"]


# ── Errors ───────────────────────────────────────────────


class PrototypeError(ValueError):
    """Base class for Story Prototype graph errors."""


class DuplicateName(PrototypeError):
    pass


class InvalidChapter(PrototypeError):
    pass


class UnknownCharacter(PrototypeError):
    pass


class NonMonotoneChapter(PrototypeError):
    pass


class StrengthOutOfRange(PrototypeError):
    pass


class InvalidRelationship(PrototypeError):
    """Unknown relationship kind or a self-referencing edge."""


class UnknownScene(PrototypeError):
    pass


class EmptyParticipants(PrototypeError):
    pass


class OutOfOrderSnapshot(PrototypeError):
    pass


class InvalidRange(PrototypeError):
    pass


def is_valid_kind(kind: str) -> bool:
    if kind in RELATIONSHIP_KINDS:
        return True
    return kind.startswith("other:") and bool(kind[len("other:"):].strip())


# ── Nodes and edges ──────────────────────────────────────


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class PrototypeMeta(_Frozen):
    title: str = ""
    background: str = ""
    environment: str = ""
    long_term_goal: str = ""
    # world-building rules stay prompt text, never graph data
    constraints: str = ""


class CharacterNode(_Frozen):
    id: str
    name: str = Field(min_length=1)
    static_attrs: dict[str, str] = Field(default_factory=dict)
    created_chapter: int = Field(ge=0)


class RelationshipVersion(_Frozen):
    src: str
    dst: str
    kind: str
    strength: float = Field(ge=0.0, le=1.0)
    direction: Direction = "mutual"
    chapter: int = Field(ge=0)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.kind)


class SceneNode(_Frozen):
    id: str
    location: str = Field(min_length=1)
    time_label: str = ""
    environment: str = ""
    created_chapter: int = Field(ge=0)


class Participation(_Frozen):
    character: str
    emotional_impact: str = Field(min_length=1)
    impact_intensity: float = Field(default=0.0, ge=-1.0, le=1.0)


class EventNode(_Frozen):
    id: str
    chapter: int = Field(ge=0)
    description: str
    consequences: tuple[str, ...] = ()
    scene: str
    participants: tuple[Participation, ...]

    @field_validator("participants")
    @classmethod
    def _non_empty(cls, v: tuple[Participation, ...]) -> tuple[Participation, ...]:
        if not v:
            raise ValueError("event needs at least one participant")
        return v


class ChapterSnapshot(_Frozen):
    """Immutable view of every element with chapter label ≤ chapter."""

    chapter: int
    meta: PrototypeMeta
    characters: tuple[CharacterNode, ...]
    relationships: tuple[RelationshipVersion, ...]
    events: tuple[EventNode, ...]
    scenes: tuple[SceneNode, ...]
    created_at: datetime

    def character(self, character_id: str) -> CharacterNode | None:
        for char in self.characters:
            if char.id == character_id:
                return char
        return None

    def scene(self, scene_id: str) -> SceneNode | None:
        for scene in self.scenes:
            if scene.id == scene_id:
                return scene
        return None


# ── Aggregate ────────────────────────────────────────────


class SnapshotMark(NamedTuple):
    """A sealed chapter: store prefix lengths plus the meta and seal time."""

    chapter: int
    meta: PrototypeMeta
    created_at: datetime
    characters: int
    relationships: int
    events: int
    scenes: int


class Checkpoint(NamedTuple):
    head_chapter: int
    meta: PrototypeMeta
    characters: int
    relationships: int
    events: int
    scenes: int


@dataclass
class StoryPrototype:
    """The single writer-owned narrative state.

    Stores are append-only lists in insertion order; head_chapter is -1 until
    snapshot 0 exists.
    """

    meta: PrototypeMeta = field(default_factory=PrototypeMeta)
    characters: list[CharacterNode] = field(default_factory=list)
    relationships: list[RelationshipVersion] = field(default_factory=list)
    events: list[EventNode] = field(default_factory=list)
    scenes: list[SceneNode] = field(default_factory=list)
    snapshots: dict[int, SnapshotMark] = field(default_factory=dict)
    head_chapter: int = -1

    _by_id: dict[str, CharacterNode] = field(default_factory=dict, init=False, repr=False, compare=False)
    _scene_ids: set[str] = field(default_factory=set, init=False, repr=False, compare=False)
    _latest: dict[tuple[str, str, str], RelationshipVersion] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        self.reindex()

    @property
    def open_chapter(self) -> int:
        return self.head_chapter + 1

    def is_empty(self) -> bool:
        return not (self.characters or self.relationships or self.events or self.scenes or self.snapshots)

    def character(self, character_id: str) -> CharacterNode | None:
        return self._by_id.get(character_id)

    def character_by_name(self, name: str) -> CharacterNode | None:
        lowered = name.strip().lower()
        for char in self.characters:
            if char.name.lower() == lowered:
                return char
        return None

    def has_scene(self, scene_id: str) -> bool:
        return scene_id in self._scene_ids

    def latest_version(self, key: tuple[str, str, str]) -> RelationshipVersion | None:
        return self._latest.get(key)

    def append_character(self, char: CharacterNode) -> None:
        self.characters.append(char)
        self._by_id[char.id] = char

    def append_relationship(self, version: RelationshipVersion) -> None:
        self.relationships.append(version)
        self._latest[version.key] = version

    def append_scene(self, scene: SceneNode) -> None:
        self.scenes.append(scene)
        self._scene_ids.add(scene.id)

    def reindex(self) -> None:
        self._by_id = {c.id: c for c in self.characters}
        self._scene_ids = {s.id for s in self.scenes}
        self._latest = {}
        for version in self.relationships:
            self._latest[version.key] = version

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(
            self.head_chapter, self.meta,
            len(self.characters), len(self.relationships), len(self.events), len(self.scenes),
        )

    def rollback(self, cp: Checkpoint) -> None:
        """Discard every mutation made since `cp` (stores are append-only)."""
        del self.characters[cp.characters:]
        del self.relationships[cp.relationships:]
        del self.events[cp.events:]
        del self.scenes[cp.scenes:]
        for chapter in [k for k in self.snapshots if k > cp.head_chapter]:
            del self.snapshots[chapter]
        self.head_chapter = cp.head_chapter
        self.meta = cp.meta
        self.reindex()
