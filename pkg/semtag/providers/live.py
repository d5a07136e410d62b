#!/usr/bin/env python3
"""
Live Chat-Completion Backend

Posts plain-text chat-completion requests to an OpenAI-compatible HTTP
endpoint, retries transient failures with exponential backoff, and reports
usage, latency and truncation for every call.
"""

import asyncio
import os
import time
from typing import Any, Awaitable, Callable, Dict, Optional, Tuple

import aiohttp
from loguru import logger
from tenacity import AsyncRetrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from semtag.errors import AuthenticationError, RefusalError, TransportError
from semtag.providers.base import (
    CompletionBackend, CompletionResult, ModelSpec, RequestParams, RunKey, Usage,
)

API_KEY_ENV = "SEMTAG_API_KEY"
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"

TRANSIENT_STATUSES = {408, 409, 429, 500, 502, 503, 504}
AUTH_STATUSES = {401, 403}


def _token_count(usage: Dict[str, Any], name: str) -> int:
    """A usage field as an int; null or missing counts as 0"""
    value = usage.get(name)
    if value is None:
        return 0
    try:
        return int(value)
    except (TypeError, ValueError) as exc:
        raise RefusalError(f"malformed usage field {name}: {value!r}") from exc


class LiveBackend(CompletionBackend):
    """
    HTTP chat-completion client.

    No response format is requested; the task output is plain text.
    """

    name = "live"

    def __init__(self,
                 api_key: Optional[str] = None,
                 endpoint: str = DEFAULT_ENDPOINT,
                 timeout_s: float = 300.0,
                 max_retries: int = 3,
                 backoff_s: float = 1.0,
                 token_limit_field: str = "max_tokens",
                 sleep: Callable[[float], Awaitable[None]] = asyncio.sleep):
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        if not self.api_key:
            raise AuthenticationError(f"{API_KEY_ENV} is not set")

        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.token_limit_field = token_limit_field
        self._sleep = sleep
        self._session: Optional[aiohttp.ClientSession] = None

    def _headers(self) -> Dict[str, str]:
        return {
            "Authorization": f"Bearer {self.api_key}",
            "Content-Type": "application/json",
        }

    def _payload(self, model: ModelSpec, params: RequestParams, prompt: str) -> Dict[str, Any]:
        return {
            "model": model.name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            self.token_limit_field: params.max_tokens,
        }

    async def _get_session(self) -> aiohttp.ClientSession:
        if self._session is None or self._session.closed:
            timeout = aiohttp.ClientTimeout(total=self.timeout_s)
            self._session = aiohttp.ClientSession(timeout=timeout, headers=self._headers())
        return self._session

    async def _post(self, payload: Dict[str, Any]) -> Tuple[int, Dict[str, Any]]:
        """Send one request; returns (HTTP status, decoded JSON body)"""
        session = await self._get_session()
        async with session.post(self.endpoint, json=payload) as response:
            try:
                body = await response.json(content_type=None)
            except ValueError:
                body = {"error": {"message": await response.text()}}
            return response.status, body or {}

    async def _attempt(self, payload: Dict[str, Any]) -> Dict[str, Any]:
        try:
            status, body = await self._post(payload)
        except (aiohttp.ClientError, asyncio.TimeoutError) as exc:
            raise TransportError(f"transport failure: {exc!r}") from exc

        if status == 200:
            return body

        message = (body.get("error") or {}).get("message", "") if isinstance(body, dict) else ""
        if status in AUTH_STATUSES:
            raise AuthenticationError(f"HTTP {status}: {message}")
        if status in TRANSIENT_STATUSES:
            raise TransportError(f"HTTP {status}: {message}")
        raise RefusalError(f"HTTP {status}: {message}")

    async def complete(self,
                       model: ModelSpec,
                       params: RequestParams,
                       prompt: str,
                       *,
                       key: Optional[RunKey] = None) -> CompletionResult:
        payload = self._payload(model, params, prompt)
        started = time.perf_counter()

        retrying = AsyncRetrying(
            stop=stop_after_attempt(self.max_retries + 1),
            wait=wait_exponential(multiplier=self.backoff_s, min=self.backoff_s),
            retry=retry_if_exception_type(TransportError),
            sleep=self._sleep,
            reraise=True,
            before_sleep=lambda state: logger.warning(
                "Retrying {} after attempt {}: {}", model.name,
                state.attempt_number, state.outcome.exception(),
            ),
        )
        async for attempt in retrying:
            with attempt:
                body = await self._attempt(payload)

        latency_ms = (time.perf_counter() - started) * 1000.0
        return self._parse(body, model, latency_ms)

    def _parse(self, body: Dict[str, Any], model: ModelSpec, latency_ms: float) -> CompletionResult:
        choices = body.get("choices") or []
        if not choices:
            raise RefusalError("response has no choices")

        choice = choices[0]
        message = choice.get("message") or {}
        finish_reason = choice.get("finish_reason")

        if message.get("refusal"):
            raise RefusalError(f"model refused: {message['refusal']}")
        if finish_reason == "content_filter":
            raise RefusalError("response withheld by content filter")

        usage = body.get("usage") or {}
        truncated = finish_reason == "length"
        if truncated:
            logger.warning("{} hit the token limit; output is partial", model.name)

        return CompletionResult(
            text=message.get("content") or "",
            usage=Usage(
                prompt_tokens=_token_count(usage, "prompt_tokens"),
                completion_tokens=_token_count(usage, "completion_tokens"),
            ),
            latency_ms=latency_ms,
            model=model.name,
            truncated=truncated,
            finish_reason=finish_reason,
        )

    async def aclose(self) -> None:
        if self._session is not None and not self._session.closed:
            await self._session.close()
