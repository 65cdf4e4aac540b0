"""Structured model output: JSON extraction, schema validation, and the repair loop.

parse_structured() pulls the first JSON object out of a reply (fenced or
wrapped in prose) and validates it against a pydantic schema. Failures are
Unparseable (no object at all) or SchemaViolation (wrong shape, out-of-range
score, or a workflow-level check such as an unknown event id).

complete_structured() is the agent-side helper: one call, and on either
failure exactly one re-prompt that appends a format reminder quoting the
error, then the error is raised.

Score fields use the Score type: a real in [0, 10] with at most two decimals.
"""

import json
import logging
import re
from collections.abc import Callable
from typing import Annotated, Any, TypeVar

from pydantic import AfterValidator, BaseModel, ValidationError

from .llm import ChatRequest, Gateway

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=BaseModel)

_FENCE = re.compile(r"```[a-zA-Z0-9_-]*\s*(.*?)```", re.DOTALL)


class StructuredOutputError(ValueError):
    """Base class for model replies that cannot be turned into a typed value."""


class Unparseable(StructuredOutputError):
    pass


class SchemaViolation(StructuredOutputError):
    pass


def _check_score(v: float) -> float:
    if not 0.0 <= v <= 10.0:
        raise ValueError(f"score {v} outside [0, 10]")
    if abs(round(v, 2) - v) > 1e-9:
        raise ValueError(f"score {v} has more than two decimals")
    return v


Score = Annotated[float, AfterValidator(_check_score)]


_DECODER = json.JSONDecoder()


def _first_object(text: str) -> dict | None:
    start = text.find("{")
    while start != -1:
        try:
            return _DECODER.raw_decode(text, start)[0]
        except json.JSONDecodeError:
            start = text.find("{", start + 1)
    return None


def extract_json_object(raw: str) -> Any:
    """Find and decode the JSON object in a model reply.

    Tries fenced code blocks first, then the first balanced {...} in the text
    that decodes.
    """
    candidates = [match.group(1).strip() for match in _FENCE.finditer(raw)]
    for text in [*candidates, raw]:
        value = _first_object(text)
        if value is not None:
            return value
    raise Unparseable(f"No JSON object found in reply: {raw[:200]!r}")


def _describe(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_structured(raw: str, schema: type[T]) -> T:
    data = extract_json_object(raw)
    if not isinstance(data, dict):
        raise SchemaViolation(f"Expected a JSON object, got {type(data).__name__}")
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        raise SchemaViolation(_describe(e)) from e


def format_reminder(error: Exception) -> str:
    return (
        "\n\nYour previous reply was rejected: "
        f"{type(error).__name__}: {error}\n"
        "Reply again with a single valid JSON object in exactly the required format, "
        "with no extra explanation."
    )


async def complete_structured(
    gateway: Gateway,
    request: ChatRequest,
    schema: type[T],
    check: Callable[[T], None] | None = None,
) -> T:
    """Call the model and parse its reply; repair once on a structured-output error.

    `check` runs after schema validation and raises a SchemaViolation (or a
    subclass) for workflow-level problems; those are repaired the same way.
    """
    try:
        return _parse_and_check(
            (await gateway.complete(request)).text, schema, check
        )
    except StructuredOutputError as e:
        logger.warning(f"{request.tag}: reply rejected ({type(e).__name__}: {e}); re-prompting once")
        repaired = request.model_copy(update={"user": request.user + format_reminder(e)})
        return _parse_and_check((await gateway.complete(repaired)).text, schema, check)


def _parse_and_check(raw: str, schema: type[T], check: Callable[[T], None] | None) -> T:
    value = parse_structured(raw, schema)
    if check is not None:
        check(value)
    return value
