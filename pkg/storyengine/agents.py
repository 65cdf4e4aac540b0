"""Agent call helper shared by every workflow.

Agents bundles the gateway with the active prompt templates. Each call
renders the tag's template, sends it, and either returns the text or parses
it into a schema with one repair attempt.
"""

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any, TypeVar

from pydantic import BaseModel

from .llm import ChatRequest, Gateway
from .prompts import PromptTemplate, render_template
from .structured import complete_structured
from .templates import DEFAULT_TEMPLATES

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=BaseModel)


@dataclass
class Agents:
    gateway: Gateway
    templates: dict[str, PromptTemplate] = field(default_factory=lambda: dict(DEFAULT_TEMPLATES))

    @property
    def concurrent(self) -> bool:
        return self.gateway.concurrent

    def prompt(self, tag: str, bindings: Mapping[str, Any], chapter: int | None = None) -> ChatRequest:
        user = render_template(self.templates[tag], bindings)
        logger.debug(f"{tag} prompt for chapter {chapter}: {len(user)} chars")
        return self.gateway.request(tag, user, chapter=chapter)

    async def text(self, tag: str, bindings: Mapping[str, Any], chapter: int | None = None) -> str:
        response = await self.gateway.complete(self.prompt(tag, bindings, chapter))
        return response.text

    async def structured(
        self,
        tag: str,
        bindings: Mapping[str, Any],
        schema: type[T],
        check: Callable[[T], None] | None = None,
        chapter: int | None = None,
    ) -> T:
        return await complete_structured(
            self.gateway, self.prompt(tag, bindings, chapter), schema, check
        )
