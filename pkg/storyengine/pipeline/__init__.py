"""Story workflows: initialization, chapter generation, and writing.

  init       brief → InitialConfig → snapshot 0
  storygen   goals → role agents → PlotWeave → scoring → commit → exit check
  writing    recall + thread → writing plan → prose → export

Every agent call goes through storyengine.agents.Agents (gateway + templates).
Structured replies get one repair re-prompt; workflow checks that fail
(unknown event ids, uncovered events, foreign participants) raise
SchemaViolation subclasses so they are repaired the same way.
"""

from .core import (  # noqa: F401
    CoverageGap,
    EmptyBody,
    EmptyCandidateSet,
    NoCharacters,
    NonContiguousChapters,
    NonEmptyPrototype,
    PreconditionError,
    UnknownEventId,
    WorkflowError,
)
from .init import (  # noqa: F401
    CharacterDraft,
    InitialConfig,
    RelationshipDraft,
    complete_config,
    extract_config,
    materialize,
)
from .storygen import (  # noqa: F401
    DEFAULT_GENERAL_RULES,
    EventDraft,
    ExitCondition,
    GenerationSettings,
    GenerationSummary,
    PlotCandidate,
    PlotContribution,
    RelationshipChange,
    RoleAgent,
    Rule,
    RuleConfig,
    SceneDraft,
    ScoreCard,
    ShortTermGoal,
    check_exit,
    commit_plot,
    exit_reason,
    load_rules,
    plotweave,
    propose_goals,
    run_story,
    score_candidate,
    select_candidate,
    spawn_role_agents,
    with_cap,
)
from .writing import (  # noqa: F401
    Beat,
    ChapterText,
    ExportManifest,
    Foreshadowing,
    GenreSpec,
    PlannedPlot,
    RecallDigest,
    ThreadDigest,
    WritingPlan,
    build_plan,
    count_words,
    export_story,
    load_planned_plots,
    planned_for,
    recall,
    thread,
    write_chapter,
    write_one,
    write_story,
)
