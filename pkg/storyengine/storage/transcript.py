"""Transcript log readers: records, scripted replay, and token usage.

The gateway appends one NDJSON record per model call:
  {ts, tag, chapter, attempt, system, user, response, usage, latency_ms}

replay_script() turns a log back into a scripted-backend script (tag →
replies in order), so any scripted run can be reproduced from its log.
usage_summary() aggregates tokens and latency by stage and by chapter.
"""

import json
from collections.abc import Iterator
from pathlib import Path

from pydantic import BaseModel, Field

STAGES: dict[str, str] = {
    "init": "storygen", "goal": "storygen", "role": "storygen", "scorer": "storygen", "exit": "storygen",
    "recall": "writing", "thread": "writing", "plan": "writing", "writer": "writing",
    "caa": "evaluation", "gea": "evaluation",
}

PER_CHAPTER_STAGES = ("storygen", "writing")
PER_CHAPTER_ALL = "all"


class TranscriptRecord(BaseModel):
    ts: str
    tag: str
    chapter: int | None = None
    attempt: int = 1
    system: str = ""
    user: str
    response: str
    usage: dict[str, int] = Field(default_factory=dict)
    latency_ms: int = 0

    @property
    def tokens(self) -> int:
        return sum(self.usage.values())


class TokenCount(BaseModel):
    calls: int = 0
    prompt: int = 0
    completion: int = 0
    latency_ms: int = 0

    @property
    def total(self) -> int:
        return self.prompt + self.completion

    @property
    def minutes(self) -> float:
        return self.latency_ms / 60_000

    def add(self, record: TranscriptRecord) -> None:
        self.calls += 1
        self.prompt += record.usage.get("prompt", 0)
        self.completion += record.usage.get("completion", 0)
        self.latency_ms += record.latency_ms


class ChapterCost(BaseModel):
    """Per-chapter spend of one stage: chapters counted, USD (with a price) and model minutes."""

    chapters: int
    usd: float | None = None
    minutes: float


class UsageSummary(BaseModel):
    by_stage: dict[str, TokenCount] = Field(default_factory=dict)
    by_chapter: dict[int, TokenCount] = Field(default_factory=dict)
    total: TokenCount = Field(default_factory=TokenCount)
    per_chapter: dict[str, ChapterCost] = Field(default_factory=dict)


def read_transcript(path: Path) -> Iterator[TranscriptRecord]:
    path = Path(path)
    if not path.is_file():
        return
    with path.open(encoding="utf-8") as f:
        for line in f:
            if line.strip():
                yield TranscriptRecord.model_validate(json.loads(line))


def replay_script(path: Path) -> dict[str, list[str]]:
    script: dict[str, list[str]] = {}
    for record in read_transcript(path):
        script.setdefault(record.tag, []).append(record.response)
    return script


def _chapter_cost(count: TokenCount, chapters: int, price_per_1k_tokens: float | None) -> ChapterCost:
    usd = None if price_per_1k_tokens is None else count.total / 1000 * price_per_1k_tokens / chapters
    return ChapterCost(chapters=chapters, usd=usd, minutes=count.minutes / chapters)


def usage_summary(path: Path, price_per_1k_tokens: float | None = None) -> UsageSummary:
    """Tokens by stage and by chapter, plus cost and minutes per chapter.

    Per-chapter figures cover storygen, writing, and "all" (the two together);
    a stage's denominator is the number of chapters >= 1 it made calls for.
    """
    summary = UsageSummary()
    seen: dict[str, set[int]] = {PER_CHAPTER_ALL: set()}
    combined = TokenCount()
    for record in read_transcript(path):
        stage = STAGES.get(record.tag, "other")
        summary.by_stage.setdefault(stage, TokenCount()).add(record)
        if record.chapter is not None:
            summary.by_chapter.setdefault(record.chapter, TokenCount()).add(record)
        summary.total.add(record)
        if stage in PER_CHAPTER_STAGES:
            combined.add(record)
            if record.chapter is not None and record.chapter > 0:
                seen.setdefault(stage, set()).add(record.chapter)
                seen[PER_CHAPTER_ALL].add(record.chapter)
    counts = {**summary.by_stage, PER_CHAPTER_ALL: combined}
    for stage, chapters in seen.items():
        if chapters:
            summary.per_chapter[stage] = _chapter_cost(counts[stage], len(chapters), price_per_1k_tokens)
    return summary
