"""Closed-form scores: dimension weights, local/global blending, S_q, S_l, QLS.

Dimensions (code → name, weight):
  RE Relevance 0.10   CH Coherence 0.20   CR Creativity 0.20   EM Empathy 0.15
  SU Surprise 0.10    CX Complexity 0.10  IM Immersion 0.15

  S_q = Σ w_d · V_d             V_d = ½ A_d + ½ H_d (A_d alone when no human scores)
  S_l = ½ (ln(1 + L_w/1000) + min(1, L_c / C_baseline))
  QLS = (S_q + S_l) / 2         S_q = mean of the available human/auto S_q
"""

import math
from collections.abc import Mapping, Sequence
from statistics import fmean

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt

from storyengine.structured import Score

DIMENSIONS = ("RE", "CH", "CR", "EM", "SU", "CX", "IM")

DIMENSION_NAMES = {
    "RE": "Relevance",
    "CH": "Coherence",
    "CR": "Creativity",
    "EM": "Empathy",
    "SU": "Surprise",
    "CX": "Complexity",
    "IM": "Immersion",
}

DIM_WEIGHTS: dict[str, float] = {
    "CH": 0.2, "CR": 0.2, "RE": 0.1, "EM": 0.15, "SU": 0.1, "CX": 0.1, "IM": 0.15,
}

EARLY_LOCAL_WEIGHT = 0.8
LATE_LOCAL_WEIGHT = 0.5
LENGTH_WORD_UNIT = 1000
DEFAULT_C_BASELINE = 10


class EvaluationError(ValueError):
    """Base class for evaluation errors."""


class NoScoredChapters(EvaluationError):
    pass


class QualityDims(BaseModel):
    """One real in [0, 10] per dimension. Accepts codes or full names as keys."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    RE: float = Field(ge=0.0, le=10.0, alias="Relevance")
    CH: float = Field(ge=0.0, le=10.0, alias="Coherence")
    CR: float = Field(ge=0.0, le=10.0, alias="Creativity")
    EM: float = Field(ge=0.0, le=10.0, alias="Empathy")
    SU: float = Field(ge=0.0, le=10.0, alias="Surprise")
    CX: float = Field(ge=0.0, le=10.0, alias="Complexity")
    IM: float = Field(ge=0.0, le=10.0, alias="Immersion")

    @classmethod
    def of(cls, values: Mapping[str, float]) -> "QualityDims":
        return cls(**{d: values[d] for d in DIMENSIONS})

    @classmethod
    def uniform(cls, value: float) -> "QualityDims":
        return cls.of({d: value for d in DIMENSIONS})

    def get(self, dim: str) -> float:
        return getattr(self, dim)

    def as_dict(self) -> dict[str, float]:
        return {d: self.get(d) for d in DIMENSIONS}


class ScoredDims(QualityDims):
    """QualityDims as ingested from a judge or rater: at most two decimals."""

    RE: Score = Field(alias="Relevance")
    CH: Score = Field(alias="Coherence")
    CR: Score = Field(alias="Creativity")
    EM: Score = Field(alias="Empathy")
    SU: Score = Field(alias="Surprise")
    CX: Score = Field(alias="Complexity")
    IM: Score = Field(alias="Immersion")

    def plain(self) -> QualityDims:
        return QualityDims.of(self.as_dict())


class LengthInputs(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    words: NonNegativeInt = Field(alias="L_w")
    chapters: NonNegativeInt = Field(alias="L_c")
    c_baseline: PositiveInt = Field(default=DEFAULT_C_BASELINE, alias="C_baseline")


# ── Local/global weighting ───────────────────────────────


def weight_for_chapter(index: int, total: int) -> float:
    """Local weight α: 0.8 in the first ceil(10%) of chapters, 0.5 after."""
    if not 1 <= index <= total:
        raise EvaluationError(f"Chapter position {index} outside 1..{total}")
    early = -(-total // 10)
    return EARLY_LOCAL_WEIGHT if index <= early else LATE_LOCAL_WEIGHT


def _clamp(value: float) -> float:
    return min(10.0, max(0.0, value))


def blend_interval(
    positions: Sequence[int],
    partials: Sequence[QualityDims],
    global_scores: QualityDims,
    total: int,
) -> QualityDims:
    """ᾱ · mean(local) + (1 − ᾱ) · global over one interval.

    ᾱ is the mean local weight over the interval's chapter positions. An
    interval without scored chapters contributes its global scores alone.
    """
    if not partials:
        return global_scores
    alpha = fmean(weight_for_chapter(p, total) for p in positions)
    return QualityDims.of({
        d: _clamp(alpha * fmean(p.get(d) for p in partials) + (1 - alpha) * global_scores.get(d))
        for d in DIMENSIONS
    })


def mean_dims(items: Sequence[QualityDims]) -> QualityDims:
    return QualityDims.of({d: fmean(item.get(d) for item in items) for d in DIMENSIONS})


# ── Final scores ─────────────────────────────────────────


def combine_auto_human(auto: QualityDims, human: QualityDims) -> QualityDims:
    return QualityDims.of({d: 0.5 * auto.get(d) + 0.5 * human.get(d) for d in DIMENSIONS})


def quality_score(dims: QualityDims, weights: Mapping[str, float] = DIM_WEIGHTS) -> float:
    return sum(weights[d] * dims.get(d) for d in DIMENSIONS)


def length_score(inp: LengthInputs) -> float:
    words_term = math.log(1 + inp.words / LENGTH_WORD_UNIT)
    chapters_term = min(1.0, inp.chapters / inp.c_baseline)
    return 0.5 * (words_term + chapters_term)


def qls(s_q_human: float | None, s_q_auto: float, s_l: float) -> float:
    s_q = s_q_auto if s_q_human is None else (s_q_human + s_q_auto) / 2
    return (s_q + s_l) / 2
