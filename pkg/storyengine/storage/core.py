"""Run directory initialization, path helpers, atomic writes and the run lock."""

import os
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

_run_dir: Path | None = None

LOCK_FILE = "run.lock"


class StorageError(ValueError):
    """Base class for persistence and run-state errors."""


class RunLocked(StorageError):
    pass


def init_storage(run_dir: Path) -> None:
    global _run_dir
    _run_dir = Path(run_dir)
    _run_dir.mkdir(parents=True, exist_ok=True)


def run_dir() -> Path:
    assert _run_dir is not None, "Call init_storage() before using storage"
    return _run_dir


def config_path() -> Path:
    return run_dir() / "config.json"


def manifest_path() -> Path:
    return run_dir() / "manifest.json"


def lock_path() -> Path:
    return run_dir() / LOCK_FILE


def texts_dir() -> Path:
    return run_dir() / "texts"


def write_atomic(path: Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    with tmp.open("w", encoding="utf-8") as f:
        f.write(text)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


@contextmanager
def run_lock() -> Iterator[None]:
    """Exclusive ownership of the run directory for mutating commands."""
    path = lock_path()
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RunLocked(f"{run_dir()} is in use by another run (remove {path.name} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        path.unlink(missing_ok=True)
