"""Tests for closed-form scores, including a regression against published system scores."""

import math
import random

import pytest
from pydantic import ValidationError

from storyengine.hnes import (
    DIM_WEIGHTS,
    DIMENSIONS,
    EvaluationError,
    LengthInputs,
    QualityDims,
    ScoredDims,
    blend_interval,
    combine_auto_human,
    length_score,
    qls,
    quality_score,
    weight_for_chapter,
)

# name: (human RE CH CR EM SU CX IM, S_q human, auto RE..IM, S_q auto, L_w, L_c, S_l, QLS)
PUBLISHED = {
    "short-direct": (
        (9.2, 8.0, 7.5, 6.3, 7.2, 7.8, 6.9), 7.50,
        (8.3, 7.9, 8.7, 7.7, 7.4, 7.1, 7.2), 7.84,
        650, 8, 0.65, 4.16,
    ),
    "long-single-pass": (
        (8.1, 8.6, 7.3, 8.4, 6.6, 7.0, 7.7), 7.76,
        (7.0, 6.3, 8.1, 6.3, 5.7, 5.8, 6.5), 6.65,
        2396, 8, 1.01, 4.11,
    ),
    "outline-expansion": (
        (7.3, 7.5, 6.8, 7.7, 8.3, 7.6, 7.0), 7.38,
        (4.5, 4.2, 8.2, 5.5, 5.3, 5.0, 6.5), 5.76,
        7391, 4, 1.26, 3.92,
    ),
    "hierarchical-script": (
        (8.2, 7.1, 7.1, 7.0, 7.5, 8.2, 7.2), 7.36,
        (7.2, 5.2, 8.2, 6.1, 5.5, 5.5, 8.0), 6.61,
        653, 8, 0.65, 3.82,
    ),
    "collaborative-agents": (
        (7.5, 9.1, 8.5, 7.3, 7.6, 8.5, 7.3), 8.07,
        (8.0, 7.2, 8.6, 7.7, 6.8, 6.8, 8.5), 7.75,
        3614, 5, 1.01, 4.46,
    ),
    "multi-agent": (
        (8.7, 8.5, 8.8, 7.8, 8.0, 8.7, 7.4), 8.28,
        (8.9, 8.0, 7.3, 7.9, 8.9, 8.4, 8.7), 8.17,
        4337, 2770, 1.34, 4.78,
    ),
    "human-serial": (
        (9.0, 8.7, 8.8, 8.2, 8.5, 8.5, 9.2), 8.71,
        (8.5, 8.2, 8.1, 8.1, 8.6, 8.5, 8.9), 8.37,
        5158, 105, 1.41, 4.96,
    ),
}


def _dims(values) -> QualityDims:
    return QualityDims.of(dict(zip(DIMENSIONS, values)))


# ── Published scores ─────────────────────────────────────


@pytest.mark.parametrize("system", sorted(PUBLISHED))
def test_quality_scores_match_published(system):
    human, s_q_h, auto, s_q_a, *_ = PUBLISHED[system]
    assert quality_score(_dims(human)) == pytest.approx(s_q_h, abs=0.01)
    assert quality_score(_dims(auto)) == pytest.approx(s_q_a, abs=0.01)


@pytest.mark.parametrize("system", sorted(PUBLISHED))
def test_length_score_matches_published(system):
    *_, words, chapters, s_l, _ = PUBLISHED[system]
    assert length_score(LengthInputs(words=words, chapters=chapters)) == pytest.approx(s_l, abs=0.01)


@pytest.mark.parametrize("system", sorted(PUBLISHED))
def test_qls_matches_published(system):
    human, _, auto, _, words, chapters, _, expected = PUBLISHED[system]
    s_l = length_score(LengthInputs(words=words, chapters=chapters))
    assert qls(quality_score(_dims(human)), quality_score(_dims(auto)), s_l) == pytest.approx(expected, abs=0.02)


# ── Weights ──────────────────────────────────────────────


def test_dimension_weights_sum_to_one():
    assert sum(DIM_WEIGHTS.values()) == pytest.approx(1.0)
    assert set(DIM_WEIGHTS) == set(DIMENSIONS)


def test_weight_for_chapter_early_tenth():
    assert [weight_for_chapter(i, 25) for i in (1, 3, 4, 25)] == [0.8, 0.8, 0.5, 0.5]
    assert weight_for_chapter(1, 1) == 0.8
    assert [weight_for_chapter(i, 10) for i in (1, 2)] == [0.8, 0.5]


def test_weight_for_chapter_out_of_range():
    with pytest.raises(EvaluationError):
        weight_for_chapter(0, 5)
    with pytest.raises(EvaluationError):
        weight_for_chapter(6, 5)


# ── Blending ─────────────────────────────────────────────


def test_blend_interval_mean_local_weight():
    partials = [QualityDims.uniform(v) for v in (6.0, 7.0, 8.0)]
    blended = blend_interval([1, 2, 3], partials, QualityDims.uniform(5.0), total=3)
    assert blended.CH == pytest.approx(0.6 * 7.0 + 0.4 * 5.0)


def test_blend_interval_without_partials_uses_global():
    global_scores = QualityDims.uniform(4.0)
    assert blend_interval([1, 2], [], global_scores, total=2) == global_scores


def test_blend_interval_clamps():
    blended = blend_interval([1], [QualityDims.uniform(10.0)], QualityDims.uniform(10.0), total=1)
    assert blended.IM <= 10.0


def test_combine_auto_human_halves():
    combined = combine_auto_human(QualityDims.uniform(6.0), QualityDims.uniform(9.0))
    assert combined.as_dict() == {d: 7.5 for d in DIMENSIONS}


# ── Length and QLS ───────────────────────────────────────


def test_length_score_natural_log_and_chapter_cap():
    assert length_score(LengthInputs(words=0, chapters=0)) == 0.0
    assert length_score(LengthInputs(words=1000, chapters=50)) == pytest.approx(0.5 * (math.log(2) + 1.0))
    assert length_score(LengthInputs(words=0, chapters=5, c_baseline=20)) == pytest.approx(0.125)


def test_length_inputs_aliases():
    assert LengthInputs.model_validate({"L_w": 10, "L_c": 2, "C_baseline": 4}).c_baseline == 4


def test_qls_auto_only():
    assert qls(None, 8.0, 1.0) == pytest.approx(4.5)
    assert qls(6.0, 8.0, 1.0) == pytest.approx(4.0)


# ── Dimension parsing ────────────────────────────────────


def test_quality_dims_accept_names_and_codes():
    by_name = QualityDims.model_validate({name: 5.0 for name in (
        "Relevance", "Coherence", "Creativity", "Empathy", "Surprise", "Complexity", "Immersion"
    )})
    assert by_name == QualityDims.uniform(5.0)


def test_quality_dims_range():
    with pytest.raises(ValidationError):
        QualityDims.of({**QualityDims.uniform(5.0).as_dict(), "SU": 11.0})


def test_scored_dims_reject_extra_precision():
    values = {**QualityDims.uniform(5.0).as_dict(), "EM": 5.555}
    with pytest.raises(ValidationError):
        ScoredDims.of(values)
    assert ScoredDims.of(QualityDims.uniform(5.25).as_dict()).plain() == QualityDims.uniform(5.25)


# ── Properties ───────────────────────────────────────────


def _random_dims(rng: random.Random) -> QualityDims:
    return QualityDims.of({d: rng.uniform(0, 10) for d in DIMENSIONS})


@pytest.mark.parametrize("seed", range(25))
def test_quality_score_is_linear(seed):
    rng = random.Random(seed)
    v, u = _random_dims(rng), _random_dims(rng)
    a = rng.random()
    b = rng.uniform(0, 1 - a)
    mixed = QualityDims.of({d: a * v.get(d) + b * u.get(d) for d in DIMENSIONS})
    assert quality_score(mixed) == pytest.approx(a * quality_score(v) + b * quality_score(u))


@pytest.mark.parametrize("seed", range(25))
def test_length_score_never_decreases_with_length(seed):
    rng = random.Random(seed)
    base = LengthInputs(words=rng.randint(0, 500_000), chapters=rng.randint(0, 200), c_baseline=rng.randint(1, 60))
    more_words = base.model_copy(update={"words": base.words + rng.randint(0, 100_000)})
    more_chapters = base.model_copy(update={"chapters": base.chapters + rng.randint(0, 50)})
    assert length_score(more_words) >= length_score(base)
    assert length_score(more_chapters) >= length_score(base)
