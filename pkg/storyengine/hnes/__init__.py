"""Hierarchical narrative evaluation with state tracking.

  scoring  dimension weights, local/global blending, S_q, S_l, QLS
  state    EvalState, chapter analysis (CAA) and interval evaluation (GEA) agents
  runner   run_hnes over a chapter directory, report file
"""

from .runner import (  # noqa: F401
    DEFAULT_INTERVAL,
    EmptyDirectory,
    EvalReport,
    HumanScoresMismatch,
    MalformedChapterFilename,
    QualityTrend,
    Schedule,
    load_chapters,
    load_human_scores,
    report_path,
    run_hnes,
    total_words,
)
from .scoring import (  # noqa: F401
    DEFAULT_C_BASELINE,
    DIM_WEIGHTS,
    DIMENSION_NAMES,
    DIMENSIONS,
    EvaluationError,
    LengthInputs,
    NoScoredChapters,
    QualityDims,
    ScoredDims,
    blend_interval,
    combine_auto_human,
    length_score,
    qls,
    quality_score,
    weight_for_chapter,
)
from .state import (  # noqa: F401
    ChapterRecord,
    EvalState,
    IntervalInfo,
    IntervalResult,
    SurfaceFeatures,
    aggregate_dimension_scores,
    analyze_chapter,
    evaluate_interval,
)
