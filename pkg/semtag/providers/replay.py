"""
Record/replay backends over a directory of completion fixtures.

Each fixture is `<doc_id>.<task>.<model>.<run_index>.txt` holding the output
text verbatim, plus a `.json` sidecar with usage, latency, truncation and the
SHA-256 of the full prompt it was recorded for.
"""

from pathlib import Path
from typing import Optional

import aiofiles
import orjson
from loguru import logger

from semtag import prompts
from semtag.errors import FixtureError, StorageError
from semtag.providers.base import (
    CompletionBackend, CompletionResult, ModelSpec, RequestParams, RunKey, Usage,
)


class FixtureStore:
    """Reads and writes completion fixtures keyed by RunKey"""

    def __init__(self, directory: Path):
        self.directory = Path(directory)

    def stem(self, key: RunKey) -> str:
        return f"{key.doc_id}.{key.task}.{key.model}.{key.run_index}"

    def text_path(self, key: RunKey) -> Path:
        return self.directory / f"{self.stem(key)}.txt"

    def meta_path(self, key: RunKey) -> Path:
        return self.directory / f"{self.stem(key)}.json"

    async def load(self, key: RunKey, prompt: str) -> CompletionResult:
        text_path, meta_path = self.text_path(key), self.meta_path(key)
        if not text_path.is_file() or not meta_path.is_file():
            raise FixtureError(f"no fixture for {key.as_tuple()}")

        async with aiofiles.open(text_path, "r", encoding="utf-8", newline="") as handle:
            text = await handle.read()
        async with aiofiles.open(meta_path, "rb") as handle:
            try:
                meta = orjson.loads(await handle.read())
            except orjson.JSONDecodeError as exc:
                raise FixtureError(f"corrupt fixture metadata {meta_path}: {exc}") from exc

        recorded = meta.get("prompt_sha256")
        if recorded != prompts.digest(prompt):
            raise FixtureError(f"prompt drift for {key.as_tuple()}: fixture was recorded for another prompt")

        return CompletionResult(
            text=text,
            usage=Usage(int(meta.get("prompt_tokens", 0)), int(meta.get("completion_tokens", 0))),
            latency_ms=float(meta.get("latency_ms", 0.0)),
            model=key.model,
            truncated=bool(meta.get("truncated", False)),
            finish_reason=meta.get("finish_reason"),
        )

    async def save(self, key: RunKey, prompt: str, result: CompletionResult) -> None:
        meta = {
            "prompt_tokens": result.usage.prompt_tokens,
            "completion_tokens": result.usage.completion_tokens,
            "latency_ms": result.latency_ms,
            "truncated": result.truncated,
            "finish_reason": result.finish_reason,
            "prompt_sha256": prompts.digest(prompt),
        }
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            async with aiofiles.open(self.text_path(key), "w", encoding="utf-8", newline="") as handle:
                await handle.write(result.text)
            async with aiofiles.open(self.meta_path(key), "wb") as handle:
                await handle.write(orjson.dumps(meta, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
        except OSError as exc:
            raise StorageError(f"cannot write fixture {self.stem(key)}: {exc}") from exc


class ReplayBackend(CompletionBackend):
    """Returns recorded fixtures verbatim; never touches the network"""

    name = "replay"

    def __init__(self, fixture_dir: Path):
        self.store = FixtureStore(fixture_dir)

    async def complete(self,
                       model: ModelSpec,
                       params: RequestParams,
                       prompt: str,
                       *,
                       key: Optional[RunKey] = None) -> CompletionResult:
        if key is None:
            raise FixtureError("replay backend needs a run key")
        return await self.store.load(key, prompt)


class RecordingBackend(CompletionBackend):
    """Delegates to another backend and stores every result as a fixture"""

    name = "record"

    def __init__(self, inner: CompletionBackend, fixture_dir: Path):
        self.inner = inner
        self.store = FixtureStore(fixture_dir)

    async def complete(self,
                       model: ModelSpec,
                       params: RequestParams,
                       prompt: str,
                       *,
                       key: Optional[RunKey] = None) -> CompletionResult:
        result = await self.inner.complete(model, params, prompt, key=key)
        if key is not None:
            await self.store.save(key, prompt, result)
            logger.debug("Recorded fixture {}", self.store.stem(key))
        return result

    async def aclose(self) -> None:
        await self.inner.aclose()
