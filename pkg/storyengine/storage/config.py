"""Run configuration (config.json in the run directory).

Every field has a default, so a stored file only needs what differs; unknown
keys are rejected. Relative paths resolve against the run directory.
"""

import hashlib
import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError

from storyengine.hnes import DEFAULT_C_BASELINE, DEFAULT_INTERVAL
from storyengine.llm import BackendConfig
from storyengine.pipeline import (
    ExitCondition,
    GenerationSettings,
    GenreSpec,
    PlannedPlot,
    load_planned_plots,
    load_rules,
)
from storyengine.pipeline.storygen import DEFAULT_GOALS_PER_CHAPTER, DEFAULT_ROUNDS
from storyengine.pipeline.writing import DEFAULT_LOOKAHEAD, DEFAULT_WINDOW

from .core import StorageError, config_path, run_dir


class ConfigError(StorageError):
    pass


class RunPaths(BaseModel):
    model_config = ConfigDict(extra="forbid")

    prototype: str = "prototype.json"
    chapters: str = "chapters"
    transcript: str = "transcript.jsonl"


class EvaluationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    interval: PositiveInt = DEFAULT_INTERVAL
    c_baseline: PositiveInt = DEFAULT_C_BASELINE


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    backend: BackendConfig = Field(default_factory=lambda: BackendConfig(kind="scripted"))
    goals_per_chapter: PositiveInt = DEFAULT_GOALS_PER_CHAPTER
    rounds: PositiveInt = DEFAULT_ROUNDS
    max_chapters: PositiveInt = 10
    rules: str | None = None
    exit_conditions: list[ExitCondition] = Field(
        default_factory=lambda: [ExitCondition(kind="llm_judgment")]
    )
    genre: GenreSpec = Field(default_factory=GenreSpec)
    # recorded for provenance; scripted replies are consumed in order
    seed: int = 0
    window: PositiveInt = DEFAULT_WINDOW
    lookahead: PositiveInt = DEFAULT_LOOKAHEAD
    planned_plots: str | None = None
    view_event_limit: PositiveInt = 20
    concurrency: PositiveInt = 4
    temperatures: dict[str, float] = Field(default_factory=dict)
    max_tokens: PositiveInt = 2048
    prompts: dict[str, str] = Field(default_factory=dict)
    price_per_1k_tokens: PositiveFloat | None = None
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    paths: RunPaths = Field(default_factory=RunPaths)

    def resolve(self, relative: str) -> Path:
        path = Path(relative)
        return path if path.is_absolute() else run_dir() / path

    @property
    def prototype_path(self) -> Path:
        return self.resolve(self.paths.prototype)

    @property
    def transcript_path(self) -> Path:
        return self.resolve(self.paths.transcript)

    def chapters_dir(self, genre: str) -> Path:
        return self.resolve(self.paths.chapters) / genre.removeprefix("other:").strip()

    def generation_settings(self) -> GenerationSettings:
        return GenerationSettings(
            goals_per_chapter=self.goals_per_chapter,
            rounds=self.rounds,
            max_chapters=self.max_chapters,
            rules=load_rules(self.resolve(self.rules) if self.rules else None),
            exit_conditions=self.exit_conditions,
            view_event_limit=self.view_event_limit,
        )

    def planned(self) -> list[PlannedPlot]:
        return load_planned_plots(self.resolve(self.planned_plots) if self.planned_plots else None)


def load_config(path: Path | None = None) -> RunConfig:
    """Defaults merged with the stored file; every referenced path must exist."""
    path = Path(path) if path is not None else config_path()
    if not path.is_file():
        raise ConfigError(f"No run configuration at {path}")
    try:
        config = RunConfig.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        raise ConfigError(f"{path.name}: {where}: {err['msg']}") from e
    referenced = [config.rules, config.planned_plots, config.backend.script_path, *config.prompts.values()]
    for relative in referenced:
        if relative and not config.resolve(relative).is_file():
            raise ConfigError(f"{path.name}: referenced file not found: {relative}")
    return config


def save_config(config: RunConfig, path: Path | None = None) -> None:
    path = Path(path) if path is not None else config_path()
    path.write_text(config.model_dump_json(indent=2, exclude_defaults=True), encoding="utf-8")


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
