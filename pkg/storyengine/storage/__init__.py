"""Run directory persistence.

A run directory holds everything one story run needs to resume:

  config.json         RunConfig (defaults merged with the stored file)
  manifest.json       RunManifest: per-chapter stage, config hash, exit reason
  prototype.json      the Story Prototype document (format_version 1)
  transcript.jsonl    one record per model call
  texts/<genre>.json  written chapter texts
  chapters/<genre>/   exported chapter files plus their manifest
  run.lock            present while a mutating command owns the directory

Call init_storage(run_dir) once before using anything here.
"""

from .config import (  # noqa: F401
    ConfigError,
    EvaluationConfig,
    RunConfig,
    RunPaths,
    config_hash,
    load_config,
    save_config,
)
from .core import (  # noqa: F401
    RunLocked,
    StorageError,
    config_path,
    init_storage,
    lock_path,
    manifest_path,
    run_dir,
    run_lock,
    texts_dir,
    write_atomic,
)
from .manifest import (  # noqa: F401
    ConfigMismatch,
    Continuation,
    RunManifest,
    Stage,
    StageRegression,
    advance_stage,
    load_manifest,
    new_manifest,
    reconcile,
    resume_run,
    save_manifest,
)
from .prototype import (  # noqa: F401
    FORMAT_VERSION,
    CorruptDocument,
    InvalidPrototype,
    PrototypeDocument,
    UnsupportedVersion,
    from_document,
    load_prototype,
    save_prototype,
    to_document,
)
from .texts import load_texts, save_texts  # noqa: F401
from .transcript import (  # noqa: F401
    PER_CHAPTER_ALL,
    PER_CHAPTER_STAGES,
    ChapterCost,
    TokenCount,
    TranscriptRecord,
    UsageSummary,
    read_transcript,
    replay_script,
    usage_summary,
)
