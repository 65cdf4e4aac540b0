"""Story Prototype — versioned dual knowledge graph with chapter snapshots.

Role Graph (characters + versioned relationships) and Plot Graph (events +
scenes) live in one in-process StoryPrototype. Chapter k is mutable while it is
the open chapter (head_chapter + 1); snapshot_chapter(k) seals it into an
immutable ChapterSnapshot. Persistence lives in storage.prototype.

Modules:
  core      node/edge types, StoryPrototype aggregate, errors
  graph     mutations and snapshots
  views     limited_view, relationship_history, plot_chain, prompt digests
  validate  well-formedness report
"""

from .core import (  # noqa: F401
    RELATIONSHIP_KINDS,
    ChapterSnapshot,
    CharacterNode,
    Checkpoint,
    DuplicateName,
    EmptyParticipants,
    EventNode,
    InvalidChapter,
    InvalidRange,
    InvalidRelationship,
    NonMonotoneChapter,
    OutOfOrderSnapshot,
    Participation,
    PrototypeError,
    PrototypeMeta,
    RelationshipVersion,
    SceneNode,
    SnapshotMark,
    StoryPrototype,
    StrengthOutOfRange,
    UnknownCharacter,
    UnknownScene,
)
from .graph import (  # noqa: F401
    add_character,
    add_event,
    add_scene,
    find_scene,
    freeze,
    get_snapshot,
    mark_chapter,
    set_meta,
    snapshot_chapter,
    upsert_relationship,
)
from .validate import validate  # noqa: F401
from .views import (  # noqa: F401
    LimitedView,
    ObservedEvent,
    describe_view,
    latest_relationships,
    limited_view,
    plot_chain,
    relationship_at,
    relationship_history,
    summarize_snapshot,
    view_of_snapshot,
)
