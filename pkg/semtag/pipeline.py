#!/usr/bin/env python3
"""
Ensemble Pipeline

Fans one document out across a roster of models and runs, scores every
candidate, and deterministically selects the best output.

Cleaning candidates are ranked by content preservation alone; tagging
candidates by content preservation, then tag well-formedness, then the
number of well-formed tags. Ties fall to lower cost, then model name, then
run index, so selection never depends on completion order.
"""

import asyncio
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple, Union

from loguru import logger

from semtag import prompts
from semtag.errors import AllRunsFailedError, NoCandidatesError, ProviderError
from semtag.metrics import preservation
from semtag.prompts import TaskKind
from semtag.providers.base import (
    CompletionBackend, CompletionResult, ModelSpec, RequestParams, RunKey, Usage, cost,
)
from semtag.tagparser import TagVocabulary, audit, n_tags, strip_tags, tokenize, twf

if TYPE_CHECKING:
    from semtag.corpus import Document


@dataclass(frozen=True)
class Task:
    """A pipeline task with its prompt template"""
    kind: TaskKind
    prompt_template: str
    tag_vocabulary: Optional[TagVocabulary] = None

    @classmethod
    def clean(cls) -> "Task":
        return cls(TaskKind.CLEAN, prompts.clean_template())

    @classmethod
    def tag(cls, vocab: Optional[TagVocabulary] = None) -> "Task":
        vocab = vocab or TagVocabulary.default()
        return cls(TaskKind.TAG, prompts.tag_template(vocab), vocab)


@dataclass(frozen=True)
class MetricSet:
    """Scores of one candidate; twf and n_tags only exist for tagging"""
    cpr: float
    twf: Optional[float] = None
    n_tags: Optional[int] = None

    def rank(self) -> Tuple[float, float, int]:
        return (self.cpr, self.twf if self.twf is not None else 0.0, self.n_tags or 0)


@dataclass
class RunRecord:
    """One (document, task, model, run) attempt"""
    doc_id: str
    task: TaskKind
    model: str
    run_index: int
    temperature: float
    max_tokens: int
    output_text: Optional[str] = None
    usage: Usage = field(default_factory=Usage)
    latency_ms: float = 0.0
    cost: float = 0.0
    metrics: Optional[MetricSet] = None
    selected: bool = False
    failure: Optional[str] = None
    truncated: bool = False
    output_path: Optional[str] = None

    @property
    def key(self) -> Tuple[str, str, str, int]:
        return (self.doc_id, self.task.value, self.model, self.run_index)

    @property
    def failed(self) -> bool:
        return self.failure is not None


def build_prompt(task: Task, body: str) -> str:
    """Task instruction, a blank line, then the document text"""
    return prompts.render(task.prompt_template, body)


def score(task: Task, input_text: str, output_text: str) -> MetricSet:
    """
    Score a candidate output against the text it was produced from.

    Tagging outputs are compared with their tags stripped, so adding markup
    costs nothing while any change to the underlying text does.

    Args:
        task: Clean or Tag task
        input_text: Text sent to the model
        output_text: Candidate returned by the model

    Returns:
        MetricSet (cpr only for cleaning)
    """
    if task.kind is TaskKind.CLEAN:
        return MetricSet(cpr=preservation(input_text, output_text).cpr)

    vocab = task.tag_vocabulary or TagVocabulary.default()
    result = audit(tokenize(output_text, vocab))
    return MetricSet(
        cpr=preservation(input_text, strip_tags(output_text, vocab)).cpr,
        twf=twf(result),
        n_tags=n_tags(result),
    )


def _selection_key(record: RunRecord, task: Task) -> tuple:
    cpr, twf_value, tags = record.metrics.rank()
    if task.kind is TaskKind.CLEAN:
        return (-cpr, record.cost, record.model, record.run_index)
    return (-cpr, -twf_value, -tags, record.cost, record.model, record.run_index)


def select_best(records: Sequence[RunRecord], task: Task) -> int:
    """
    Index of the winning record.

    Args:
        records: Scored records of one (document, task)
        task: Decides which metrics take part in the ordering

    Returns:
        Position of the selected record in `records`

    Raises:
        NoCandidatesError: no record has metrics
    """
    candidates = [i for i, record in enumerate(records) if not record.failed and record.metrics is not None]
    if not candidates:
        raise NoCandidatesError("no successful records to select from")
    return min(candidates, key=lambda i: _selection_key(records[i], task))


class EnsembleRunner:
    """
    Runs a task over the whole roster for one document at a time.

    Completions for a document run concurrently up to `parallelism`; scoring
    and selection happen afterwards over key-ordered results.
    """

    def __init__(self,
                 backend: CompletionBackend,
                 temperature: float = 1.0,
                 max_tokens: int = 8000,
                 parallelism: int = 4):
        self.backend = backend
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.parallelism = max(1, parallelism)

    async def _complete_one(self,
                            semaphore: asyncio.Semaphore,
                            model: ModelSpec,
                            params: RequestParams,
                            prompt: str,
                            key: RunKey) -> Union[CompletionResult, ProviderError]:
        async with semaphore:
            try:
                return await self.backend.complete(model, params, prompt, key=key)
            except ProviderError as exc:
                logger.error("{} run {} failed for {}: {}", model.name, params.run_index, key.doc_id, exc)
                return exc

    async def run_task(self,
                       doc: "Document",
                       task: Task,
                       roster: Sequence[ModelSpec],
                       runs_per_model: int = 2) -> List[RunRecord]:
        """
        Issue |roster| x runs_per_model completions, score and select.

        Args:
            doc: Source document (its text is the prompt body)
            task: Clean or Tag task
            roster: Models to run
            runs_per_model: Runs per model

        Returns:
            Records in (roster order, run index) order, exactly one selected

        Raises:
            AllRunsFailedError: every completion failed; carries the records
        """
        if not roster:
            raise ValueError("roster is empty")
        if runs_per_model < 1:
            raise ValueError("runs_per_model must be positive")

        prompt = build_prompt(task, doc.raw_text)
        semaphore = asyncio.Semaphore(self.parallelism)
        plan = [
            (model, RequestParams(self.temperature, self.max_tokens, run_index))
            for model in roster
            for run_index in range(1, runs_per_model + 1)
        ]

        logger.info("{}: {} task, {} completions", doc.doc_id, task.kind.value, len(plan))
        outcomes = await asyncio.gather(*[
            self._complete_one(
                semaphore, model, params, prompt,
                RunKey(doc.doc_id, task.kind.value, model.name, params.run_index),
            )
            for model, params in plan
        ])

        records = [
            self._to_record(doc, task, model, params, outcome)
            for (model, params), outcome in zip(plan, outcomes)
        ]

        if all(record.failed for record in records):
            raise AllRunsFailedError(doc.doc_id, task.kind.value, records)

        winner = records[select_best(records, task)]
        winner.selected = True
        logger.info("{}: selected {} run {} (cpr={:.4f})",
                    doc.doc_id, winner.model, winner.run_index, winner.metrics.cpr)
        return records

    def _to_record(self,
                   doc: "Document",
                   task: Task,
                   model: ModelSpec,
                   params: RequestParams,
                   outcome: Union[CompletionResult, ProviderError]) -> RunRecord:
        record = RunRecord(
            doc_id=doc.doc_id,
            task=task.kind,
            model=model.name,
            run_index=params.run_index,
            temperature=params.temperature,
            max_tokens=params.max_tokens,
        )
        if isinstance(outcome, ProviderError):
            record.failure = f"{type(outcome).__name__}: {outcome}"
            return record

        if outcome.truncated:
            logger.warning("{} {} run {} was truncated; scoring partial output",
                           doc.doc_id, model.name, params.run_index)
        record.output_text = outcome.text
        record.usage = outcome.usage
        record.latency_ms = outcome.latency_ms
        record.cost = cost(outcome.usage, model)
        record.truncated = outcome.truncated
        record.metrics = score(task, doc.raw_text, outcome.text)
        return record
