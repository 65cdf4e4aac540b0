"""Prototype document: whole-graph JSON persistence with a format version.

Document layout (format_version 1):
  meta, head_chapter, characters, relationships, events, scenes   full stores
  snapshots   [{chapter, created_at, meta?}]   snapshot marks are rebuilt on
              load from the stores, since every element carries its chapter label

save_prototype validates first and writes atomically. load_prototype rejects
unknown versions (UnsupportedVersion) and malformed documents
(CorruptDocument, naming the offending element path).
"""

import json
import logging
from datetime import datetime
from pathlib import Path

from pydantic import BaseModel, ValidationError

from storyengine.prototype import (
    CharacterNode,
    EventNode,
    PrototypeMeta,
    RelationshipVersion,
    SceneNode,
    StoryPrototype,
    mark_chapter,
    validate,
)

from .core import StorageError, write_atomic

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class UnsupportedVersion(StorageError):
    pass


class CorruptDocument(StorageError):
    pass


class InvalidPrototype(StorageError):
    """Refused to save a prototype that fails validation."""


class SnapshotEntry(BaseModel):
    chapter: int
    created_at: datetime
    # only stored when it differs from the document meta
    meta: PrototypeMeta | None = None


class PrototypeDocument(BaseModel):
    format_version: int = FORMAT_VERSION
    meta: PrototypeMeta
    head_chapter: int
    characters: list[CharacterNode]
    relationships: list[RelationshipVersion]
    events: list[EventNode]
    scenes: list[SceneNode]
    snapshots: list[SnapshotEntry]


def to_document(proto: StoryPrototype) -> PrototypeDocument:
    return PrototypeDocument(
        meta=proto.meta,
        head_chapter=proto.head_chapter,
        characters=proto.characters,
        relationships=proto.relationships,
        events=proto.events,
        scenes=proto.scenes,
        snapshots=[
            SnapshotEntry(
                chapter=k, created_at=s.created_at, meta=None if s.meta == proto.meta else s.meta
            )
            for k, s in sorted(proto.snapshots.items())
        ],
    )


def from_document(doc: PrototypeDocument) -> StoryPrototype:
    proto = StoryPrototype(
        meta=doc.meta,
        characters=list(doc.characters),
        relationships=list(doc.relationships),
        events=list(doc.events),
        scenes=list(doc.scenes),
        head_chapter=doc.head_chapter,
    )
    chapters = [s.chapter for s in doc.snapshots]
    if chapters != list(range(doc.head_chapter + 1)):
        raise CorruptDocument(f"snapshots: expected chapters 0..{doc.head_chapter}, found {chapters}")
    for entry in doc.snapshots:
        proto.snapshots[entry.chapter] = mark_chapter(proto, entry.chapter, entry.created_at, entry.meta)
    return proto


def save_prototype(proto: StoryPrototype, path: Path) -> None:
    problems = validate(proto)
    if problems:
        raise InvalidPrototype(f"Prototype is not well-formed: {problems[0]} ({len(problems)} problems)")
    write_atomic(path, to_document(proto).model_dump_json(indent=1))
    logger.debug(f"Saved prototype at chapter {proto.head_chapter} to {path}")


def load_prototype(path: Path) -> StoryPrototype:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorruptDocument(f"{path.name}: not valid JSON ({e})") from e
    if not isinstance(data, dict):
        raise CorruptDocument(f"{path.name}: <root>: expected an object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"{path.name}: format_version {version!r} (supported: {FORMAT_VERSION})")
    try:
        doc = PrototypeDocument.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        raise CorruptDocument(f"{path.name}: {where}: {err['msg']}") from e
    proto = from_document(doc)
    problems = validate(proto)
    if problems:
        raise CorruptDocument(f"{path.name}: {problems[0]}")
    return proto
