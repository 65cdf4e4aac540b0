"""Handlebars prompt rendering for agent templates.

render_prompt() compiles and caches Handlebars templates. render_template()
first checks that every placeholder of a PromptTemplate has a binding and
raises MissingBinding otherwise, so a prompt never goes out with a silently
empty slot.

Placeholder scan rules:
  {{x}}, {{{x}}}, {{x.y}}        root name `x` must be bound
  {{#if x}} / {{#unless x}}      `x` must be bound
  {{#each xs}} / {{#with x}}     `xs` must be bound; the block body is
                                 scoped to the item and is not checked
  {{! comment}}, {{else}}, {{this}}, {{@index}}  ignored
"""

import re
from collections.abc import Callable, Mapping
from typing import Any

import pybars
from pydantic import BaseModel

_compiler = pybars.Compiler()
_cache: dict[str, Callable] = {}

_TOKEN = re.compile(r"\{\{(\{?)\s*(.*?)\s*\}?\}\}", re.DOTALL)
_SCOPED = frozenset({"each", "with"})
_LITERAL = re.compile(r"""^(-?\d+(\.\d+)?|"[^"]*"|'[^']*'|true|false|null)$""")


class PromptError(ValueError):
    """Raised when a Handlebars template fails to compile or render."""


class MissingBinding(PromptError):
    def __init__(self, name: str, template: str = ""):
        where = f" in template '{template}'" if template else ""
        super().__init__(f"No binding for placeholder '{name}'{where}")
        self.name = name


class PromptTemplate(BaseModel):
    name: str
    body: str


# ── Rendering ────────────────────────────────────────────


def _is_path(arg: str) -> bool:
    return not _LITERAL.match(arg) and not arg.startswith(("@", "this", "../"))


def placeholders(body: str) -> list[str]:
    """Root names the template reads from its top-level context, in order of appearance."""
    names: list[str] = []
    depth = 0
    for match in _TOKEN.finditer(body):
        expr = match.group(2)
        if not expr or expr.startswith("!"):
            continue
        if expr.startswith("#"):
            parts = expr[1:].split()
            if not parts:
                continue
            if depth == 0:
                names.extend(a for a in parts[1:] if _is_path(a))
            if parts[0] in _SCOPED:
                depth += 1
            continue
        if expr.startswith("/"):
            if expr[1:].strip() in _SCOPED and depth:
                depth -= 1
            continue
        if expr == "else" or expr.startswith(("^", ">")):
            continue
        head = expr.split()[0]
        if depth == 0 and _is_path(head):
            names.append(head)
    seen: list[str] = []
    for name in names:
        root = name.split(".")[0]
        if root not in seen:
            seen.append(root)
    return seen


def render_prompt(template_str: str, context: Mapping[str, Any]) -> str:
    """Compile and render a Handlebars template with the given context.

    Templates are cached by source string to avoid recompilation.
    """
    try:
        compiled = _cache.get(template_str)
        if compiled is None:
            compiled = _compiler.compile(template_str)
            _cache[template_str] = compiled
        return str(compiled(dict(context)))
    except Exception as e:
        raise PromptError(f"Template error: {e}") from e


def render_template(template: PromptTemplate, bindings: Mapping[str, Any]) -> str:
    """Render after verifying every placeholder is bound."""
    for name in placeholders(template.body):
        if name not in bindings:
            raise MissingBinding(name, template.name)
    return render_prompt(template.body, bindings)
