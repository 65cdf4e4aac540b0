"""Evaluation state: chapter analysis (CAA), interval evaluation (GEA), aggregation.

EvalState is threaded through the whole run. Each chapter gets one CAA call
that sees the surface features of every earlier chapter plus the full text of
this one. Every `interval` chapters (and once more at the end for a trailing
partial interval) one GEA call sees all surface features and the rolling
Interval_Info, never raw chapter text, and replaces Interval_Info with its new
story summary.
"""

import logging

from pydantic import BaseModel, ConfigDict, Field, field_validator

from storyengine.agents import Agents
from storyengine.structured import StructuredOutputError

from .scoring import (
    EvaluationError,
    NoScoredChapters,
    QualityDims,
    ScoredDims,
    blend_interval,
    mean_dims,
)

logger = logging.getLogger(__name__)

SYNOPSIS_WORDS = 40
CHARACTER_STATUS_WORDS = 100
PLOT_STATUS_WORDS = 50


def _truncate(text: str, limit: int, field: str) -> str:
    words = text.split()
    if len(words) <= limit:
        return text
    logger.warning(f"{field} has {len(words)} words; truncated to {limit}")
    return " ".join(words[:limit])


class SurfaceFeatures(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    plot_summary: str = Field(min_length=1, alias="Plot Summary")
    objective_conditions: str = Field(min_length=1, alias="Current Objective Conditions")


class IntervalInfo(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    overall_synopsis: str = Field(alias="Overall Synopsis")
    character_status: str = Field(alias="Main Characters Status Update")
    plot_status: str = Field(alias="Current Plot Status")

    @field_validator("overall_synopsis")
    @classmethod
    def _synopsis(cls, v: str) -> str:
        return _truncate(v, SYNOPSIS_WORDS, "Overall synopsis")

    @field_validator("character_status")
    @classmethod
    def _characters(cls, v: str) -> str:
        return _truncate(v, CHARACTER_STATUS_WORDS, "Character status")

    @field_validator("plot_status")
    @classmethod
    def _plot(cls, v: str) -> str:
        return _truncate(v, PLOT_STATUS_WORDS, "Plot status")

    def render(self) -> str:
        return (
            f"Overall synopsis: {self.overall_synopsis}\n"
            f"Main characters:\n{self.character_status}\n"
            f"Current plot: {self.plot_status}"
        )


class ChapterRecord(BaseModel):
    """One analysed chapter. `partial` and `features` are None when the chapter stayed unscored."""

    index: int
    position: int
    features: SurfaceFeatures | None = None
    partial: QualityDims | None = None

    @property
    def scored(self) -> bool:
        return self.partial is not None


class IntervalResult(BaseModel):
    end_index: int
    global_scores: QualityDims
    summary: IntervalInfo


class EvalState(BaseModel):
    records: list[ChapterRecord] = Field(default_factory=list)
    interval_results: list[IntervalResult] = Field(default_factory=list)
    interval_info: IntervalInfo | None = None

    @property
    def last_end(self) -> int:
        return self.interval_results[-1].end_index if self.interval_results else 0

    def update(self, record: ChapterRecord) -> None:
        if any(r.index == record.index for r in self.records):
            raise EvaluationError(f"Chapter {record.index} already analysed")
        self.records.append(record)

    def features_text(self) -> str:
        lines = []
        for record in self.records:
            if record.features is None:
                continue
            lines.append(
                f"Chapter {record.index}:\n"
                f"  Plot summary: {record.features.plot_summary}\n"
                f"  Objective conditions: {record.features.objective_conditions}"
            )
        return "\n".join(lines)


class _CaaReply(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    features: SurfaceFeatures = Field(alias="Surface Features")
    partial: ScoredDims = Field(alias="Partial Scores")


class _GeaReply(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    global_scores: ScoredDims = Field(alias="Global Scores")
    summary: IntervalInfo = Field(alias="Story Summary")


# ── Agents ───────────────────────────────────────────────


async def analyze_chapter(
    state: EvalState, chapter_text: str, agents: Agents, index: int | None = None
) -> ChapterRecord:
    """Run the chapter analysis agent and append the record to the state."""
    if not chapter_text.strip():
        raise EvaluationError("Chapter text is empty")
    position = len(state.records) + 1
    index = position if index is None else index
    try:
        reply = await agents.structured(
            "caa",
            {
                "chapter": index,
                "previous_features": state.features_text() or "(this is the first chapter)",
                "chapter_text": chapter_text,
            },
            _CaaReply,
            chapter=index,
        )
        record = ChapterRecord(
            index=index, position=position, features=reply.features, partial=reply.partial.plain()
        )
    except StructuredOutputError as e:
        logger.warning(f"Chapter {index} left unscored: {e}")
        record = ChapterRecord(index=index, position=position)
    state.update(record)
    return record


async def evaluate_interval(state: EvalState, agents: Agents) -> IntervalResult | None:
    """Run the global evaluation agent over every record so far."""
    if len(state.records) <= state.last_end:
        raise EvaluationError("No chapters analysed since the last interval")
    end = len(state.records)
    chapter = state.records[-1].index
    try:
        reply = await agents.structured(
            "gea",
            {
                "chapter": chapter,
                "features": state.features_text() or "(no surface features available)",
                "interval_info": state.interval_info.render() if state.interval_info else "",
            },
            _GeaReply,
            chapter=chapter,
        )
    except StructuredOutputError as e:
        logger.warning(f"Global evaluation after chapter {chapter} skipped: {e}")
        return None
    result = IntervalResult(end_index=end, global_scores=reply.global_scores.plain(), summary=reply.summary)
    state.interval_results.append(result)
    state.interval_info = reply.summary
    return result


# ── Aggregation ──────────────────────────────────────────


def aggregate_dimension_scores(state: EvalState, total: int) -> QualityDims:
    """A_d: the mean over intervals of each interval's local/global blend.

    Scored chapters after the last successful global evaluation form one
    more group scored from local partials alone.
    """
    scored = [r for r in state.records if r.scored]
    if not scored:
        raise NoScoredChapters("No chapter produced usable scores")
    if not state.interval_results:
        logger.warning("No global evaluation succeeded; using local scores only")
        return mean_dims([r.partial for r in scored])

    blended: list[QualityDims] = []
    previous = 0
    for result in state.interval_results:
        in_interval = [r for r in state.records if previous < r.position <= result.end_index]
        blended.append(blend_interval(
            [r.position for r in in_interval],
            [r.partial for r in in_interval if r.scored],
            result.global_scores,
            total,
        ))
        previous = result.end_index
    leftover = [r.partial for r in state.records if r.position > previous and r.scored]
    if leftover:
        logger.warning(f"{len(leftover)} chapters after position {previous} have no global evaluation; local scores only")
        blended.append(mean_dims(leftover))
    return mean_dims(blended)
