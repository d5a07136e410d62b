#!/usr/bin/env python3
"""
Completion Backend Interface

Shared request/response types for every completion backend, the pricing
arithmetic, and the abstract backend all pipeline calls go through.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

from semtag.errors import ConfigError

TOKENS_PER_PRICE_UNIT = 1_000_000


@dataclass(frozen=True)
class ModelSpec:
    """A model identifier with its per-million-token prices"""
    name: str
    input_price: float = 0.0
    output_price: float = 0.0

    def __post_init__(self):
        if not self.name:
            raise ConfigError("model name is empty")
        if self.input_price < 0 or self.output_price < 0:
            raise ConfigError(f"negative price for model {self.name}")


@dataclass(frozen=True)
class RequestParams:
    """Sampling parameters for one completion"""
    temperature: float = 1.0
    max_tokens: int = 8000
    run_index: int = 1

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"temperature out of range [0, 2]: {self.temperature}")
        if self.max_tokens < 1:
            raise ConfigError(f"max_tokens must be positive: {self.max_tokens}")
        if self.run_index < 1:
            raise ConfigError(f"run_index must be positive: {self.run_index}")


@dataclass(frozen=True)
class Usage:
    """Token consumption reported for one completion"""
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class RunKey:
    """Identity of one (document, task, model, run) attempt"""
    doc_id: str
    task: str
    model: str
    run_index: int

    def as_tuple(self) -> tuple:
        return (self.doc_id, self.task, self.model, self.run_index)


@dataclass(frozen=True)
class CompletionResult:
    """Backend text with measured usage and latency"""
    text: str
    usage: Usage
    latency_ms: float
    model: str
    truncated: bool = False
    finish_reason: Optional[str] = None


def cost(usage: Usage, model: ModelSpec) -> float:
    """
    Currency cost of a completion under the model's per-million pricing.

    >>> round(cost(Usage(1000, 1000), ModelSpec("gpt-4.1", 2.00, 8.00)), 6)
    0.01
    """
    return (
        usage.prompt_tokens * model.input_price / TOKENS_PER_PRICE_UNIT
        + usage.completion_tokens * model.output_price / TOKENS_PER_PRICE_UNIT
    )


class CompletionBackend(ABC):
    """
    Uniform interface to text-completion backends.

    Implementations must tolerate concurrent `complete` calls; the pipeline
    bounds concurrency itself.
    """

    name = "backend"

    @abstractmethod
    async def complete(self,
                       model: ModelSpec,
                       params: RequestParams,
                       prompt: str,
                       *,
                       key: Optional[RunKey] = None) -> CompletionResult:
        """
        Request one completion.

        Args:
            model: Model to call
            params: Temperature, token cap and run index
            prompt: Full prompt (instruction, blank line, body)
            key: Run identity, required by fixture-backed backends

        Returns:
            CompletionResult; truncation is flagged, never raised
        """

    async def aclose(self) -> None:
        """Release network resources"""
