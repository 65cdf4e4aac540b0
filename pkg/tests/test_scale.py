"""Scale smoke test: a thousand scripted chapters through generation and evaluation.

Slow; runs only with STORYENGINE_SCALE_TEST=1.
"""

import os
import time
import tracemalloc

import pytest

from storyengine.hnes import run_hnes
from storyengine.pipeline import GenerationSettings, InitialConfig, materialize, run_story
from storyengine.prototype import StoryPrototype, validate

from tests.factories import SETUP, StoryResponder, make_agents

CHAPTERS = 1000

pytestmark = pytest.mark.skipif(
    os.environ.get("STORYENGINE_SCALE_TEST") != "1", reason="set STORYENGINE_SCALE_TEST=1 to run"
)


@pytest.mark.asyncio
async def test_thousand_chapters(tmp_path):
    transcript = tmp_path / "transcript.jsonl"
    agents = make_agents(responder=StoryResponder(), transcript=transcript)
    proto = StoryPrototype()
    materialize(InitialConfig.model_validate(SETUP), proto)
    settings = GenerationSettings(goals_per_chapter=1, rounds=1, max_chapters=CHAPTERS)

    started = time.monotonic()
    tracemalloc.start()
    summary = await run_story(proto, settings, agents)

    chap_dir = tmp_path / "chapters"
    chap_dir.mkdir()
    for n in range(1, CHAPTERS + 1):
        (chap_dir / f"chapter_{n:04d}.md").write_text(f"# Chapter {n}\n\nThe fog rolled in over the harbour.\n")
    report = await run_hnes(chap_dir, agents, interval=10)
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    elapsed = time.monotonic() - started

    assert summary.head_chapter == CHAPTERS
    assert validate(proto) == []
    assert len(report.records) == CHAPTERS
    assert report.schedule.gea_after[-1] == CHAPTERS
    assert elapsed < 600
    assert peak < transcript.stat().st_size
