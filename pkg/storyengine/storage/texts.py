"""Written chapter texts per genre (texts/<genre>.json), kept between write runs."""

import logging
from pathlib import Path

from pydantic import TypeAdapter

from storyengine.pipeline import ChapterText

from .core import texts_dir, write_atomic

logger = logging.getLogger(__name__)

_TEXTS = TypeAdapter(list[ChapterText])


def _texts_path(genre: str) -> Path:
    return texts_dir() / f"{genre.removeprefix('other:').strip()}.json"


def load_texts(genre: str) -> dict[int, ChapterText]:
    path = _texts_path(genre)
    if not path.is_file():
        return {}
    return {t.chapter: t for t in _TEXTS.validate_json(path.read_bytes())}


def save_texts(genre: str, texts: dict[int, ChapterText]) -> None:
    ordered = [texts[k] for k in sorted(texts)]
    write_atomic(_texts_path(genre), _TEXTS.dump_json(ordered, indent=2).decode("utf-8"))
    logger.debug(f"Saved {len(ordered)} {genre} chapter texts")
