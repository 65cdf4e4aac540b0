"""Run manifest: progress of one run directory, for resuming after a crash.

Stages per chapter only move forward: generated → written → evaluated.
The prototype is saved before the manifest on every commit, so on resume
the prototype's head chapter is the source of truth and the manifest is
brought up to it (reconcile).
"""

import logging
import uuid
from datetime import datetime, timezone
from enum import IntEnum
from pathlib import Path

from pydantic import BaseModel, Field

from .config import RunConfig, config_hash
from .core import StorageError, manifest_path, write_atomic

logger = logging.getLogger(__name__)


class ConfigMismatch(StorageError):
    pass


class StageRegression(StorageError):
    pass


class Stage(IntEnum):
    generated = 1
    written = 2
    evaluated = 3


def _now() -> datetime:
    return datetime.now(timezone.utc)


class RunManifest(BaseModel):
    run_id: str = Field(default_factory=lambda: uuid.uuid4().hex)
    config_hash: str
    last_committed_chapter: int = -1
    stages: dict[int, Stage] = Field(default_factory=dict)
    exit_reason: str | None = None
    created_at: datetime = Field(default_factory=_now)
    updated_at: datetime = Field(default_factory=_now)


class Continuation(BaseModel):
    next_chapter: int
    finished: bool


def new_manifest(config: RunConfig) -> RunManifest:
    return RunManifest(config_hash=config_hash(config))


def load_manifest(path: Path | None = None) -> RunManifest:
    path = Path(path) if path is not None else manifest_path()
    if not path.is_file():
        raise StorageError(f"No run manifest at {path}; run init first")
    return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))


def save_manifest(manifest: RunManifest, path: Path | None = None) -> None:
    manifest.updated_at = _now()
    write_atomic(Path(path) if path is not None else manifest_path(), manifest.model_dump_json(indent=2))


def advance_stage(manifest: RunManifest, chapter: int, stage: Stage) -> None:
    current = manifest.stages.get(chapter)
    if current is not None and stage < current:
        raise StageRegression(f"Chapter {chapter} is already {current.name}; cannot go back to {stage.name}")
    manifest.stages[chapter] = stage
    if stage == Stage.generated:
        manifest.last_committed_chapter = max(manifest.last_committed_chapter, chapter)


def reconcile(manifest: RunManifest, head_chapter: int) -> None:
    """Record chapters the prototype committed after the manifest was last saved."""
    if manifest.last_committed_chapter > head_chapter:
        raise StorageError(
            f"Manifest records chapter {manifest.last_committed_chapter} but the prototype ends at {head_chapter}"
        )
    for chapter in range(manifest.last_committed_chapter + 1, head_chapter + 1):
        logger.warning(f"Chapter {chapter} was committed but not recorded; recording it now")
        advance_stage(manifest, chapter, Stage.generated)


def resume_run(manifest: RunManifest, config: RunConfig, force: bool = False) -> Continuation:
    """Where generation continues: the chapter after the last committed one.

    A run stopped by the chapter cap is only finished for the current cap, so
    raising max_chapters (with force) lets it continue.
    """
    current = config_hash(config)
    if current != manifest.config_hash:
        if not force:
            raise ConfigMismatch("The run configuration changed since this run started (use --force to continue)")
        logger.warning("Continuing with a changed configuration")
        manifest.config_hash = current
    stopped = manifest.exit_reason is not None and manifest.exit_reason != "max_chapters"
    finished = stopped or manifest.last_committed_chapter >= config.max_chapters
    return Continuation(next_chapter=manifest.last_committed_chapter + 1, finished=finished)
