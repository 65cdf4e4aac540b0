"""Writing stage: committed prototype chapters → genre text.

recall         digest of relevant earlier events and emotional memories
thread         foreshadowing hints for planned plots in the next chapters
build_plan     ordered beat list covering every event of the chapter
write_chapter  final prose
export_story   chapter_%04d.md files plus a manifest with L_w and L_c

Writing only reads snapshots; the prototype is never mutated here.
"""

import asyncio
import json
import logging
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator

from storyengine.agents import Agents
from storyengine.prototype import EventNode, StoryPrototype, get_snapshot, plot_chain, summarize_snapshot
from storyengine.structured import SchemaViolation

from .core import CoverageGap, EmptyBody, NonContiguousChapters, PreconditionError, UnknownEventId

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 5
DEFAULT_LOOKAHEAD = 3
CHAPTER_FILE = "chapter_{:04d}.md"
MANIFEST_FILE = "manifest.json"


# ── Types ────────────────────────────────────────────────


class RelevantEvent(BaseModel):
    event_id: str
    why_relevant: str = ""


class RecallDigest(BaseModel):
    chapter: int
    relevant_events: list[RelevantEvent] = Field(default_factory=list)
    emotional_memory: dict[str, str] = Field(default_factory=dict)


class PlannedPlot(BaseModel):
    target_chapter: int
    description: str = Field(min_length=1)


class Foreshadowing(BaseModel):
    target_chapter: int
    hint: str = Field(min_length=1)


class ThreadDigest(BaseModel):
    chapter: int
    foreshadowing: list[Foreshadowing] = Field(default_factory=list)


class GenreSpec(BaseModel):
    genre: str = "novel"
    style_notes: str = ""
    target_words: PositiveInt = Field(default=1500, ge=100)

    @field_validator("genre")
    @classmethod
    def _known_genre(cls, v: str) -> str:
        if v in ("novel", "screenplay"):
            return v
        if v.startswith("other:") and v[len("other:"):].strip():
            return v
        raise ValueError(f"genre must be novel, screenplay or other:<name>, got {v!r}")

    @property
    def label(self) -> str:
        return self.genre.removeprefix("other:").strip()


class Beat(BaseModel):
    text: str = Field(min_length=1)
    event_ids: list[str] = Field(default_factory=list)


class WritingPlan(BaseModel):
    chapter: int
    title: str
    snapshot_summary: str
    recall: RecallDigest
    thread: ThreadDigest
    genre: GenreSpec
    beats: list[Beat] = Field(min_length=1)

    @property
    def beat_list(self) -> list[str]:
        return [b.text for b in self.beats]


class ChapterText(BaseModel):
    chapter: int
    genre: str
    title: str = ""
    body: str
    word_count: int = Field(ge=0)


class ExportEntry(BaseModel):
    chapter: int
    file: str
    title: str
    word_count: int


class ExportManifest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    genre: str
    total_words: int = Field(alias="L_w")
    total_chapters: int = Field(alias="L_c")
    chapters: list[ExportEntry] = Field(default_factory=list)


class _RecallReply(BaseModel):
    relevant_events: list[RelevantEvent] = Field(default_factory=list)
    emotional_memory: dict[str, str] = Field(default_factory=dict)


class _ThreadReply(BaseModel):
    foreshadowing: list[Foreshadowing] = Field(default_factory=list)


class _PlanReply(BaseModel):
    title: str = Field(min_length=1)
    beats: list[Beat] = Field(min_length=1)


def count_words(text: str) -> int:
    return len(text.split())


def _require_written_chapter(proto: StoryPrototype, chapter: int) -> None:
    if chapter < 1:
        raise PreconditionError(f"Only chapters ≥ 1 are written, got {chapter}")
    get_snapshot(proto, chapter)


# ── Recall ───────────────────────────────────────────────


async def recall(proto: StoryPrototype, chapter: int, window: int, agents: Agents) -> RecallDigest:
    _require_written_chapter(proto, chapter)
    if window < 1:
        raise PreconditionError(f"Recall window must be positive, got {window}")
    candidates = plot_chain(proto, max(0, chapter - window), chapter - 1)
    if not candidates:
        return RecallDigest(chapter=chapter)
    snapshot = get_snapshot(proto, chapter)
    candidate_ids = {e.id for e in candidates}
    characters = {c.id: c for c in snapshot.characters}
    by_name = {c.name.lower(): c.id for c in snapshot.characters}

    def check(reply: _RecallReply) -> None:
        unknown = [r.event_id for r in reply.relevant_events if r.event_id not in candidate_ids]
        if unknown:
            raise UnknownEventId(f"Cited events {unknown} are not among the recalled candidates")
        for key in reply.emotional_memory:
            if key not in characters and key.lower() not in by_name:
                raise SchemaViolation(f"Emotional memory for unknown character '{key}'")

    reply = await agents.structured(
        "recall",
        {
            "chapter": chapter,
            "summary": summarize_snapshot(snapshot),
            "candidates": [
                {"id": e.id, "chapter": e.chapter, "description": e.description} for e in candidates
            ],
        },
        _RecallReply,
        check,
        chapter=chapter,
    )
    memory = {
        (key if key in characters else by_name[key.lower()]): text
        for key, text in reply.emotional_memory.items()
    }
    return RecallDigest(chapter=chapter, relevant_events=reply.relevant_events, emotional_memory=memory)


# ── Thread ───────────────────────────────────────────────


def load_planned_plots(path: Path | None) -> list[PlannedPlot]:
    if path is None:
        return []
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [PlannedPlot.model_validate(item) for item in data]


def planned_for(planned: list[PlannedPlot], chapter: int, lookahead: int) -> list[PlannedPlot]:
    """Planned plots whose target lies in (chapter, chapter + lookahead]."""
    return [p for p in planned if chapter < p.target_chapter <= chapter + lookahead]


async def thread(
    proto: StoryPrototype,
    chapter: int,
    lookahead: int,
    planned: list[PlannedPlot],
    agents: Agents,
) -> ThreadDigest:
    _require_written_chapter(proto, chapter)
    for plot in planned:
        if not chapter < plot.target_chapter <= chapter + lookahead:
            raise PreconditionError(
                f"Planned plot for chapter {plot.target_chapter} is outside "
                f"({chapter}, {chapter + lookahead}]"
            )
    if not planned:
        return ThreadDigest(chapter=chapter)
    allowed: dict[int, int] = {}
    for plot in planned:
        allowed[plot.target_chapter] = allowed.get(plot.target_chapter, 0) + 1

    def check(reply: _ThreadReply) -> None:
        used: dict[int, int] = {}
        for hint in reply.foreshadowing:
            if hint.target_chapter not in allowed:
                raise SchemaViolation(f"Hint targets chapter {hint.target_chapter}, which has no planned plot")
            used[hint.target_chapter] = used.get(hint.target_chapter, 0) + 1
            if used[hint.target_chapter] > allowed[hint.target_chapter]:
                raise SchemaViolation(f"More than one hint per planned plot for chapter {hint.target_chapter}")

    reply = await agents.structured(
        "thread",
        {
            "chapter": chapter,
            "summary": summarize_snapshot(get_snapshot(proto, chapter)),
            "planned": [p.model_dump() for p in planned],
        },
        _ThreadReply,
        check,
        chapter=chapter,
    )
    return ThreadDigest(chapter=chapter, foreshadowing=reply.foreshadowing)


# ── Plan and prose ───────────────────────────────────────


def _recall_text(digest: RecallDigest, events: dict[str, EventNode]) -> str:
    lines = []
    for item in digest.relevant_events:
        event = events.get(item.event_id)
        what = event.description if event else item.event_id
        lines.append(f"- chapter {event.chapter if event else '?'}: {what} ({item.why_relevant})")
    for character, memory in digest.emotional_memory.items():
        lines.append(f"- [{character}] remembers: {memory}")
    return "\n".join(lines)


def _thread_text(digest: ThreadDigest) -> str:
    return "\n".join(f"- toward chapter {h.target_chapter}: {h.hint}" for h in digest.foreshadowing)


async def build_plan(
    proto: StoryPrototype,
    chapter: int,
    recall_digest: RecallDigest,
    thread_digest: ThreadDigest,
    genre: GenreSpec,
    agents: Agents,
) -> WritingPlan:
    snapshot = get_snapshot(proto, chapter)
    chapter_events = [e for e in snapshot.events if e.chapter == chapter]
    event_ids = {e.id for e in chapter_events}
    summary = summarize_snapshot(snapshot)

    def check(reply: _PlanReply) -> None:
        cited = {i for beat in reply.beats for i in beat.event_ids}
        unknown = sorted(cited - event_ids)
        if unknown:
            raise UnknownEventId(f"Beats cite events {unknown} that are not in chapter {chapter}")
        uncovered = [e.id for e in chapter_events if e.id not in cited]
        if uncovered:
            raise CoverageGap(f"Events {uncovered} are not covered by any beat")

    reply = await agents.structured(
        "plan",
        {
            "chapter": chapter,
            "summary": summary,
            "events": [{"id": e.id, "description": e.description} for e in chapter_events],
            "recall": _recall_text(recall_digest, {e.id: e for e in snapshot.events}),
            "thread": _thread_text(thread_digest),
            "genre": genre.label,
            "style_notes": genre.style_notes,
            "target_words": genre.target_words,
        },
        _PlanReply,
        check,
        chapter=chapter,
    )
    return WritingPlan(
        chapter=chapter,
        title=reply.title.strip(),
        snapshot_summary=summary,
        recall=recall_digest,
        thread=thread_digest,
        genre=genre,
        beats=reply.beats,
    )


async def write_chapter(plan: WritingPlan, agents: Agents) -> ChapterText:
    body = (await agents.text(
        "writer",
        {
            "chapter": plan.chapter,
            "title": plan.title,
            "summary": plan.snapshot_summary,
            "beats": plan.beat_list,
            "genre": plan.genre.label,
            "style_notes": plan.genre.style_notes,
            "target_words": plan.genre.target_words,
        },
        chapter=plan.chapter,
    )).strip()
    if not body:
        raise EmptyBody(f"Writer returned no text for chapter {plan.chapter}")
    return ChapterText(
        chapter=plan.chapter,
        genre=plan.genre.genre,
        title=plan.title,
        body=body,
        word_count=count_words(body),
    )


async def write_one(
    proto: StoryPrototype,
    chapter: int,
    genre: GenreSpec,
    agents: Agents,
    *,
    window: int = DEFAULT_WINDOW,
    lookahead: int = DEFAULT_LOOKAHEAD,
    planned: list[PlannedPlot] | None = None,
) -> ChapterText:
    """Recall → thread → plan → prose for one committed chapter."""
    recall_digest = await recall(proto, chapter, window, agents)
    thread_digest = await thread(
        proto, chapter, lookahead, planned_for(planned or [], chapter, lookahead), agents
    )
    plan = await build_plan(proto, chapter, recall_digest, thread_digest, genre, agents)
    text = await write_chapter(plan, agents)
    logger.info(f"Wrote chapter {chapter} ({genre.genre}): {text.word_count} words")
    return text


async def write_story(
    proto: StoryPrototype,
    chapters: list[int],
    genre: GenreSpec,
    agents: Agents,
    *,
    window: int = DEFAULT_WINDOW,
    lookahead: int = DEFAULT_LOOKAHEAD,
    planned: list[PlannedPlot] | None = None,
) -> list[ChapterText]:
    """Write several chapters; concurrently when the backend allows it."""
    kwargs = {"window": window, "lookahead": lookahead, "planned": planned}
    if agents.concurrent:
        return list(await asyncio.gather(*(write_one(proto, n, genre, agents, **kwargs) for n in chapters)))
    return [await write_one(proto, n, genre, agents, **kwargs) for n in chapters]


# ── Export ───────────────────────────────────────────────


def render_chapter_file(text: ChapterText) -> str:
    return f"# Chapter {text.chapter}: {text.title}\n\n{text.body}\n"


def export_story(chapters: list[ChapterText], out_dir: Path, genre: str) -> ExportManifest:
    ordered = sorted(chapters, key=lambda c: c.chapter)
    numbers = [c.chapter for c in ordered]
    if numbers != list(range(1, len(ordered) + 1)):
        raise NonContiguousChapters(f"Chapters must run 1..{len(ordered)} without gaps, got {numbers}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for text in ordered:
        name = CHAPTER_FILE.format(text.chapter)
        (out_dir / name).write_text(render_chapter_file(text), encoding="utf-8")
        entries.append(ExportEntry(chapter=text.chapter, file=name, title=text.title, word_count=text.word_count))
    manifest = ExportManifest(
        genre=genre,
        total_words=sum(e.word_count for e in entries),
        total_chapters=len(entries),
        chapters=entries,
    )
    (out_dir / MANIFEST_FILE).write_text(manifest.model_dump_json(by_alias=True, indent=2), encoding="utf-8")
    logger.info(f"Exported {len(entries)} chapters ({manifest.total_words} words) to {out_dir}")
    return manifest
