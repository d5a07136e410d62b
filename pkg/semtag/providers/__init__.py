"""
Completion backends: live HTTP, deterministic mock, and record/replay.
"""

from typing import TYPE_CHECKING, Optional

from semtag.errors import ConfigError
from semtag.providers.base import (
    CompletionBackend, CompletionResult, ModelSpec, RequestParams, RunKey, Usage, cost,
)
from semtag.providers.live import LiveBackend
from semtag.providers.mock import MockBackend, Transform, canned_tags
from semtag.providers.replay import FixtureStore, RecordingBackend, ReplayBackend

if TYPE_CHECKING:
    from semtag.config import Config

__all__ = [
    "CompletionBackend", "CompletionResult", "ModelSpec", "RequestParams", "RunKey", "Usage",
    "cost", "LiveBackend", "MockBackend", "canned_tags", "FixtureStore", "RecordingBackend",
    "ReplayBackend", "create_backend",
]


def create_backend(config: "Config", transform: Optional[Transform] = None) -> CompletionBackend:
    """
    Instantiate the backend selected in the configuration.

    Args:
        config: Validated configuration
        transform: Output transform for the mock backend

    Returns:
        Ready-to-use CompletionBackend
    """
    if config.backend == "mock":
        return MockBackend(transform)

    if config.backend == "replay":
        if config.fixture_dir is None:
            raise ConfigError("replay backend needs fixture_dir")
        return ReplayBackend(config.fixture_dir)

    live = LiveBackend(
        endpoint=config.endpoint,
        timeout_s=config.request_timeout_s,
        max_retries=config.max_retries,
        backoff_s=config.retry_backoff_s,
        token_limit_field=config.token_limit_field,
    )
    if config.backend == "record":
        if config.fixture_dir is None:
            raise ConfigError("record backend needs fixture_dir")
        return RecordingBackend(live, config.fixture_dir)
    return live
