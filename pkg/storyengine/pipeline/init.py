"""Initialization: user brief → InitialConfig → snapshot 0 of the prototype.

extract_config    one templated call, parsed into InitialConfig (one repair)
complete_config   deterministic defaults for fields the brief left out
materialize       writes meta, characters and relationships at chapter 0,
                  then seals snapshot 0
"""

import logging
from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from storyengine.agents import Agents
from storyengine.prototype import (
    StoryPrototype,
    add_character,
    set_meta,
    snapshot_chapter,
    upsert_relationship,
)
from storyengine.prototype.core import is_valid_kind

from .core import NoCharacters, NonEmptyPrototype, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_STRENGTH = 0.5
TITLE_WORDS = 6


class CharacterDraft(BaseModel):
    name: str = Field(min_length=1)
    static_attrs: dict[str, str] = Field(default_factory=dict)

    @field_validator("static_attrs", mode="before")
    @classmethod
    def _stringify(cls, v: Any) -> Any:
        if isinstance(v, dict):
            return {str(k): str(val) for k, val in v.items()}
        return v


class RelationshipDraft(BaseModel):
    src_name: str
    dst_name: str
    kind: str
    strength: float | None = Field(default=None, ge=0.0, le=1.0)
    direction: Literal["directed", "mutual"] = "mutual"

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, v: str) -> str:
        if not is_valid_kind(v):
            raise ValueError(f"unknown relationship kind: {v}")
        return v


class InitialConfig(BaseModel):
    title: str = ""
    background: str = ""
    environment: str = ""
    # world rules the story must respect; kept as text, shown in summaries
    constraints: str = ""
    long_term_goal: str
    characters: list[CharacterDraft] = Field(default_factory=list)
    relationships: list[RelationshipDraft] = Field(default_factory=list)

    @field_validator("long_term_goal")
    @classmethod
    def _goal_present(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("long_term_goal must not be empty")
        return v

    @model_validator(mode="after")
    def _endpoints_listed(self) -> "InitialConfig":
        names = [c.name.strip().lower() for c in self.characters]
        if len(set(names)) != len(names):
            raise ValueError("character names must be unique")
        for rel in self.relationships:
            for endpoint in (rel.src_name, rel.dst_name):
                if endpoint.strip().lower() not in names:
                    raise ValueError(f"relationship endpoint '{endpoint}' is not a listed character")
            if rel.src_name.strip().lower() == rel.dst_name.strip().lower():
                raise ValueError(f"relationship of '{rel.src_name}' with itself")
        return self


async def extract_config(user_text: str, agents: Agents) -> InitialConfig:
    if not user_text or not user_text.strip():
        raise PreconditionError("The story brief is empty")
    config = await agents.structured("init", {"brief": user_text}, InitialConfig, chapter=0)
    logger.info(
        f"Extracted setup: {len(config.characters)} characters, "
        f"{len(config.relationships)} relationships"
    )
    return config


def complete_config(config: InitialConfig) -> InitialConfig:
    """Fill fields the brief left out. Idempotent."""
    if not config.characters:
        raise NoCharacters("The story setup names no characters")
    title = config.title.strip()
    if not title:
        title = " ".join(config.background.split()[:TITLE_WORDS]) or "Untitled"
    environment = config.environment if config.environment.strip() else config.background
    relationships = [
        rel if rel.strength is not None else rel.model_copy(update={"strength": DEFAULT_STRENGTH})
        for rel in config.relationships
    ]
    return config.model_copy(update={
        "title": title,
        "environment": environment,
        "relationships": relationships,
    })


def materialize(config: InitialConfig, proto: StoryPrototype) -> None:
    """Write the completed setup into an empty prototype and seal snapshot 0."""
    if not proto.is_empty():
        raise NonEmptyPrototype("The prototype already holds a story")
    config = complete_config(config)
    cp = proto.checkpoint()
    try:
        set_meta(
            proto,
            title=config.title,
            background=config.background,
            environment=config.environment,
            long_term_goal=config.long_term_goal,
            constraints=config.constraints,
        )
        ids: dict[str, str] = {}
        for char in config.characters:
            ids[char.name.strip().lower()] = add_character(proto, char.name, char.static_attrs, 0)

        # later entries for the same (src, dst, kind) replace earlier ones
        latest: dict[tuple[str, str, str], RelationshipDraft] = {}
        for rel in config.relationships:
            key = (ids[rel.src_name.strip().lower()], ids[rel.dst_name.strip().lower()], rel.kind)
            if key in latest:
                logger.warning(f"Duplicate relationship {rel.src_name}->{rel.dst_name} ({rel.kind}); keeping the last")
            latest[key] = rel
        for (src, dst, kind), rel in latest.items():
            upsert_relationship(proto, src, dst, kind, rel.strength, rel.direction, 0)

        snapshot_chapter(proto, 0)
    except Exception:
        proto.rollback(cp)
        raise
    logger.info(f"Materialized '{config.title}' with {len(proto.characters)} characters")
