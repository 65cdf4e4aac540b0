"""Tests for written chapter texts kept per genre."""

from storyengine import storage
from storyengine.pipeline import ChapterText


def _text(chapter: int, genre: str = "novel") -> ChapterText:
    return ChapterText(chapter=chapter, genre=genre, title=f"Tides {chapter}", body="The tide turned.", word_count=3)


def test_load_texts_missing_genre():
    assert storage.load_texts("novel") == {}


def test_save_and_load_texts():
    texts = {2: _text(2), 1: _text(1)}
    storage.save_texts("novel", texts)
    loaded = storage.load_texts("novel")
    assert list(loaded) == [1, 2]
    assert loaded[2] == _text(2)


def test_texts_are_kept_per_genre():
    storage.save_texts("novel", {1: _text(1)})
    storage.save_texts("other:radio play", {1: _text(1, "other:radio play")})
    assert (storage.texts_dir() / "radio play.json").is_file()
    assert storage.load_texts("novel")[1].genre == "novel"
    assert storage.load_texts("other:radio play")[1].genre == "other:radio play"
