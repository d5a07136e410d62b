"""
Deterministic in-process backend.

Returns the prompt body (optionally transformed) with token usage estimated
as ceil(chars / 4). Latency is always 0 so mock runs produce reproducible
ledgers.
"""

import math
import re
from typing import Callable, Dict, Optional

from semtag import prompts
from semtag.prompts import TaskKind
from semtag.providers.base import (
    CompletionBackend, CompletionResult, ModelSpec, RequestParams, RunKey, Usage,
)

CHARS_PER_TOKEN = 4

Transform = Callable[[str, Optional[TaskKind], ModelSpec, RequestParams], str]


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / CHARS_PER_TOKEN)


def identity(body: str, task: Optional[TaskKind], model: ModelSpec, params: RequestParams) -> str:
    return body


def canned_tags(lexicon: Dict[str, str]) -> Transform:
    """
    Build a transform that tags lexicon terms on tagging prompts.

    Args:
        lexicon: term -> tag name, e.g. {"Security Council": "organization"}

    Returns:
        Transform wrapping each whole-word occurrence of a term in its tag;
        cleaning prompts pass through unchanged
    """
    terms = sorted(lexicon, key=len, reverse=True)
    pattern = re.compile("|".join(rf"\b{re.escape(term)}\b" for term in terms)) if terms else None

    def transform(body: str, task: Optional[TaskKind], model: ModelSpec, params: RequestParams) -> str:
        if task is not TaskKind.TAG or pattern is None:
            return body
        return pattern.sub(lambda m: f"<{lexicon[m.group(0)]}>{m.group(0)}</{lexicon[m.group(0)]}>", body)

    return transform


class MockBackend(CompletionBackend):
    """Identity or deterministic-transform backend for tests and dry runs"""

    name = "mock"

    def __init__(self, transform: Optional[Transform] = None):
        self.transform = transform or identity
        self.calls = 0

    async def complete(self,
                       model: ModelSpec,
                       params: RequestParams,
                       prompt: str,
                       *,
                       key: Optional[RunKey] = None) -> CompletionResult:
        self.calls += 1
        task, body = prompts.split(prompt)
        text = self.transform(body, task, model, params)

        truncated = estimate_tokens(text) > params.max_tokens
        if truncated:
            text = text[:params.max_tokens * CHARS_PER_TOKEN]

        return CompletionResult(
            text=text,
            usage=Usage(prompt_tokens=estimate_tokens(prompt), completion_tokens=estimate_tokens(text)),
            latency_ms=0.0,
            model=model.name,
            truncated=truncated,
            finish_reason="length" if truncated else "stop",
        )
