"""run_hnes: evaluate a directory of chapter files end to end.

  INIT    fresh EvalState
  LOAD    chapter_<digits>.<md|txt> files, numeric order, [start, end] slice
  LOOP    CAA on every chapter; GEA whenever processed % interval == 0
  FLUSH   one more GEA when chapters since the last successful GEA remain
  REPORT  A_d, optional human H_d, V_d, S_q, S_l (manifest word counts), QLS

The report is written next to the chapter directory as
<chapters-dir-name>-evaluation.json.
"""

import json
import logging
import re
from pathlib import Path
from statistics import fmean, pstdev

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError

from storyengine.agents import Agents

from .scoring import (
    DEFAULT_C_BASELINE,
    EvaluationError,
    LengthInputs,
    QualityDims,
    ScoredDims,
    combine_auto_human,
    length_score,
    mean_dims,
    qls,
    quality_score,
)
from .state import ChapterRecord, EvalState, IntervalResult, aggregate_dimension_scores, analyze_chapter, evaluate_interval

logger = logging.getLogger(__name__)

DEFAULT_INTERVAL = 10
CHAPTER_NAME = re.compile(r"^chapter_(\d+)\.(md|txt)$")
EXPORT_MANIFEST = "manifest.json"


class EmptyDirectory(EvaluationError):
    pass


class MalformedChapterFilename(EvaluationError):
    pass


class HumanScoresMismatch(EvaluationError):
    pass


class Schedule(BaseModel):
    interval: PositiveInt
    start_idx: int | None = None
    end_idx: int | None = None
    gea_after: list[int] = Field(default_factory=list)
    gea_failed: list[int] = Field(default_factory=list)
    flushed: bool = False


class QualityTrend(BaseModel):
    per_chapter: dict[int, float] = Field(default_factory=dict)
    mean: float | None = None
    std: float | None = None


class EvalReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    auto: QualityDims = Field(alias="A_d")
    human: QualityDims | None = Field(default=None, alias="H_d")
    combined: QualityDims = Field(alias="V_d")
    s_q_auto: float = Field(alias="S_q_auto")
    s_q_human: float | None = Field(default=None, alias="S_q_human")
    s_q: float = Field(alias="S_q")
    s_l: float = Field(alias="S_l")
    qls: float = Field(alias="QLS")
    auto_only: bool
    length: LengthInputs
    schedule: Schedule
    records: list[ChapterRecord]
    intervals: list[IntervalResult]
    quality_trend: QualityTrend


# ── Loading ──────────────────────────────────────────────


def load_chapters(chap_dir: Path, start_idx: int | None = None, end_idx: int | None = None) -> list[tuple[int, Path]]:
    """Chapter files in numeric order, restricted to start_idx ≤ n ≤ end_idx."""
    chap_dir = Path(chap_dir)
    if start_idx is not None and end_idx is not None and start_idx > end_idx:
        raise EvaluationError(f"start_idx {start_idx} is after end_idx {end_idx}")
    if not chap_dir.is_dir():
        raise EmptyDirectory(f"No chapter directory at {chap_dir}")
    found: list[tuple[int, Path]] = []
    for path in chap_dir.iterdir():
        if not path.is_file() or not path.name.lower().startswith("chapter"):
            continue
        match = CHAPTER_NAME.match(path.name)
        if match is None:
            raise MalformedChapterFilename(f"Unexpected chapter file name: {path.name}")
        found.append((int(match.group(1)), path))
    if not found:
        raise EmptyDirectory(f"No chapter files in {chap_dir}")
    numbers = [n for n, _ in found]
    if len(set(numbers)) != len(numbers):
        raise MalformedChapterFilename(f"Duplicate chapter numbers in {chap_dir}")
    found.sort()
    selected = [
        (n, p) for n, p in found
        if (start_idx is None or n >= start_idx) and (end_idx is None or n <= end_idx)
    ]
    if not selected:
        raise EmptyDirectory(f"No chapters between {start_idx} and {end_idx} in {chap_dir}")
    return selected


def load_human_scores(path: Path) -> QualityDims:
    """Mean per dimension across raters; the file is a JSON array of seven-dimension records."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise HumanScoresMismatch(f"Human scores file is not valid JSON: {e}") from e
    if not isinstance(data, list) or not data:
        raise HumanScoresMismatch("Human scores file must be a non-empty array of rater records")
    raters = []
    for i, item in enumerate(data):
        try:
            raters.append(ScoredDims.model_validate(item).plain())
        except ValidationError as e:
            raise HumanScoresMismatch(f"Rater {i + 1}: {e.errors()[0]['msg']} at {e.errors()[0]['loc']}") from e
    return mean_dims(raters)


def _body_words(text: str) -> int:
    lines = text.splitlines()
    if lines and lines[0].startswith("# "):
        lines = lines[1:]
    return len("\n".join(lines).split())


def total_words(chap_dir: Path, chapters: list[tuple[int, Path]]) -> int:
    """L_w from the export manifest when it lists every chapter, otherwise a recount."""
    wanted = {n for n, _ in chapters}
    manifest_path = Path(chap_dir) / EXPORT_MANIFEST
    if manifest_path.is_file():
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            counts = {int(e["chapter"]): int(e["word_count"]) for e in manifest.get("chapters", [])}
            if wanted <= counts.keys():
                return sum(counts[n] for n in wanted)
            logger.warning("Export manifest does not list every evaluated chapter; recounting")
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            logger.warning(f"Unreadable export manifest ({e}); recounting")
    return sum(_body_words(path.read_text(encoding="utf-8")) for _, path in chapters)


# ── Run ──────────────────────────────────────────────────


def _trend(records: list[ChapterRecord]) -> QualityTrend:
    per_chapter = {r.index: quality_score(r.partial) for r in records if r.scored}
    if not per_chapter:
        return QualityTrend()
    values = list(per_chapter.values())
    return QualityTrend(per_chapter=per_chapter, mean=fmean(values), std=pstdev(values))


def report_path(chap_dir: Path) -> Path:
    chap_dir = Path(chap_dir)
    return chap_dir.parent / f"{chap_dir.name}-evaluation.json"


async def _global_evaluation(state: EvalState, agents: Agents, schedule: Schedule) -> None:
    chapter = state.records[-1].index
    if await evaluate_interval(state, agents) is None:
        schedule.gea_failed.append(chapter)
    else:
        schedule.gea_after.append(chapter)


async def run_hnes(
    chap_dir: Path,
    agents: Agents,
    *,
    interval: int = DEFAULT_INTERVAL,
    start_idx: int | None = None,
    end_idx: int | None = None,
    c_baseline: int = DEFAULT_C_BASELINE,
    human_scores_file: Path | None = None,
) -> EvalReport:
    if interval < 1:
        raise EvaluationError(f"Interval must be positive, got {interval}")
    chapters = load_chapters(chap_dir, start_idx, end_idx)
    human = load_human_scores(human_scores_file) if human_scores_file is not None else None
    state = EvalState()
    schedule = Schedule(interval=interval, start_idx=start_idx, end_idx=end_idx)
    logger.info(f"Evaluating {len(chapters)} chapters from {chap_dir} (interval {interval})")

    for processed, (number, path) in enumerate(chapters, start=1):
        await analyze_chapter(state, path.read_text(encoding="utf-8"), agents, index=number)
        if processed % interval == 0:
            await _global_evaluation(state, agents, schedule)

    if len(state.records) > state.last_end:
        logger.info(f"Final global evaluation for {len(state.records) - state.last_end} trailing chapters")
        schedule.flushed = True
        await _global_evaluation(state, agents, schedule)

    auto = aggregate_dimension_scores(state, len(chapters))
    s_q_auto = quality_score(auto)
    if human is not None:
        combined = combine_auto_human(auto, human)
        s_q_human = quality_score(human)
        s_q = (s_q_auto + s_q_human) / 2
    else:
        combined = auto
        s_q_human = None
        s_q = s_q_auto
    length = LengthInputs(words=total_words(chap_dir, chapters), chapters=len(chapters), c_baseline=c_baseline)
    s_l = length_score(length)

    report = EvalReport(
        auto=auto,
        human=human,
        combined=combined,
        s_q_auto=s_q_auto,
        s_q_human=s_q_human,
        s_q=s_q,
        s_l=s_l,
        qls=qls(s_q_human, s_q_auto, s_l),
        auto_only=human is None,
        length=length,
        schedule=schedule,
        records=state.records,
        intervals=state.interval_results,
        quality_trend=_trend(state.records),
    )
    out = report_path(chap_dir)
    out.write_text(report.model_dump_json(by_alias=True, indent=2), encoding="utf-8")
    logger.info(f"S_q {s_q:.2f}, S_l {s_l:.2f}, QLS {report.qls:.2f} → {out}")
    return report
