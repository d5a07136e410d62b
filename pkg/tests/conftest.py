"""Shared fixtures: synthetic OCR documents, corpora and backends."""

import asyncio
from pathlib import Path
from typing import Dict, List, Optional

import pytest

from semtag.config import Config, DEFAULT_ROSTER
from semtag.corpus import Document
from semtag.errors import TransportError
from semtag.providers import (
    CompletionBackend, CompletionResult, MockBackend, ModelSpec, RequestParams, RunKey, canned_tags,
)

LEFT_COLUMN = [
    "The Security Council,",
    "Taking note of the report",
    "of the Secretary-General on",
    "the situation in Iran,",
]
RIGHT_COLUMN = [
    "Decides to remain seized",
    "of the matter until 1946",
    "and requests the United",
    "Nations to report again.",
]

LEXICON: Dict[str, str] = {
    "Security Council": "organization",
    "Secretary-General": "entity",
    "Iran": "location",
    "1946": "date",
    "United Nations": "organization",
}


def noisy_document(index: int) -> str:
    """Two columns printed side by side, page header and a hyphenated break"""
    header = f"S/RES/{index} (1946)          Page {index % 3 + 1}"
    rows = [f"{left:<32}{right}" for left, right in zip(LEFT_COLUMN, RIGHT_COLUMN)]
    footer = f"Resolu-\ntion {index} adopted unanimously."
    return "\n".join([header, "", *rows, "", footer]) + "\n"


class FlakyBackend(CompletionBackend):
    """Fails every call for the listed models, identity otherwise"""

    def __init__(self, failing=(), delay_by_model: Optional[Dict[str, float]] = None):
        self.failing = set(failing)
        self.delay_by_model = delay_by_model or {}
        self.inner = MockBackend()

    async def complete(self, model: ModelSpec, params: RequestParams, prompt: str, *,
                       key: Optional[RunKey] = None) -> CompletionResult:
        await asyncio.sleep(self.delay_by_model.get(model.name, 0))
        if model.name in self.failing:
            raise TransportError("connection reset")
        return await self.inner.complete(model, params, prompt, key=key)


@pytest.fixture
def flaky_backend():
    return FlakyBackend


@pytest.fixture
def roster() -> List[ModelSpec]:
    return [entry.to_spec() for entry in DEFAULT_ROSTER]


@pytest.fixture
def document() -> Document:
    return Document(doc_id="s_res_1", raw_text=noisy_document(1), source_path=Path("s_res_1.txt"))


@pytest.fixture
def corpus_dir(tmp_path: Path) -> Path:
    directory = tmp_path / "corpus"
    directory.mkdir()
    for index in range(1, 11):
        (directory / f"s_res_{index}.txt").write_text(noisy_document(index), encoding="utf-8")
    return directory


@pytest.fixture
def mock_config() -> Config:
    return Config(backend="mock")


@pytest.fixture
def tagging_backend() -> MockBackend:
    return MockBackend(canned_tags(LEXICON))
