"""Workflow error family."""

from storyengine.structured import SchemaViolation


class WorkflowError(ValueError):
    """Base class for init, storygen and writing workflow errors."""


class PreconditionError(WorkflowError):
    pass


class NoCharacters(WorkflowError):
    pass


class NonEmptyPrototype(WorkflowError):
    pass


class EmptyCandidateSet(WorkflowError):
    pass


class EmptyBody(WorkflowError):
    pass


class NonContiguousChapters(WorkflowError):
    pass


class UnknownEventId(SchemaViolation):
    """The model cited an event id outside the set it was shown."""


class CoverageGap(SchemaViolation):
    """A committed event of the chapter is not covered by any beat."""
