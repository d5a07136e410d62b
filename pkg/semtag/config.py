#!/usr/bin/env python3
"""
Pipeline Configuration

A single JSON document validated with pydantic. Omitted fields fall back to
the request parameters the pipeline was designed around: temperature 1,
8000 max tokens, two runs per model, the five standard tags, and four
in-flight completions.
"""

from pathlib import Path
from typing import List, Literal, Optional

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from semtag.errors import ConfigError
from semtag.providers.base import ModelSpec, RequestParams
from semtag.providers.live import DEFAULT_ENDPOINT
from semtag.tagparser import DEFAULT_TAGS, TagVocabulary

BackendName = Literal["live", "mock", "replay", "record"]


class ModelPricing(BaseModel):
    """Roster entry; prices are currency per million tokens"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(min_length=1)
    input_price: float = Field(ge=0.0)
    output_price: float = Field(ge=0.0)

    def to_spec(self) -> ModelSpec:
        return ModelSpec(self.name, self.input_price, self.output_price)


# Illustrative only: published prices change; pin your own table in the config file.
DEFAULT_ROSTER = [
    ModelPricing(name="gpt-4.1", input_price=2.00, output_price=8.00),
    ModelPricing(name="gpt-4.1-mini", input_price=0.40, output_price=1.60),
    ModelPricing(name="gpt-4.1-nano", input_price=0.10, output_price=0.40),
    ModelPricing(name="gpt-4o", input_price=2.50, output_price=10.00),
    ModelPricing(name="gpt-5-mini", input_price=0.25, output_price=2.00),
    ModelPricing(name="gpt-5-nano", input_price=0.05, output_price=0.40),
    ModelPricing(name="gpt-5.1", input_price=1.25, output_price=10.00),
]


class Config(BaseModel):
    """Validated pipeline settings"""
    model_config = ConfigDict(extra="forbid")

    roster: List[ModelPricing] = Field(default_factory=lambda: list(DEFAULT_ROSTER), min_length=1)
    runs_per_model: int = Field(default=2, ge=1)
    temperature: float = Field(default=1.0, ge=0.0, le=2.0)
    max_tokens: int = Field(default=8000, ge=1)
    tags: List[str] = Field(default_factory=lambda: list(DEFAULT_TAGS))
    parallelism: int = Field(default=4, ge=1)
    backend: BackendName = "live"
    endpoint: str = DEFAULT_ENDPOINT
    fixture_dir: Optional[Path] = None
    winners_only: bool = False

    request_timeout_s: float = Field(default=300.0, gt=0.0)
    max_retries: int = Field(default=3, ge=0)
    retry_backoff_s: float = Field(default=1.0, ge=0.0)
    token_limit_field: str = "max_tokens"

    @field_validator("roster")
    @classmethod
    def _unique_names(cls, roster: List[ModelPricing]) -> List[ModelPricing]:
        names = [entry.name for entry in roster]
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise ValueError(f"duplicate model names: {duplicates}")
        return roster

    @field_validator("tags")
    @classmethod
    def _valid_tags(cls, tags: List[str]) -> List[str]:
        try:
            TagVocabulary.from_names(tags)
        except ConfigError as exc:
            raise ValueError(str(exc)) from exc
        return tags

    def model_specs(self) -> List[ModelSpec]:
        return [entry.to_spec() for entry in self.roster]

    def vocabulary(self) -> TagVocabulary:
        return TagVocabulary.from_names(self.tags)

    def request_params(self, run_index: int = 1) -> RequestParams:
        return RequestParams(temperature=self.temperature, max_tokens=self.max_tokens, run_index=run_index)

    def with_overrides(self, **overrides) -> "Config":
        """Copy with the non-None overrides applied and re-validated"""
        values = self.model_dump()
        values.update({name: value for name, value in overrides.items() if value is not None})
        return load_config_data(values)


def load_config_data(data: dict) -> Config:
    """Validate a decoded config object; keys starting with '_' are comments"""
    data = {key: value for key, value in data.items() if not key.startswith("_")}
    try:
        return Config.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration:\n{exc}") from exc


def load_config(path: Optional[Path] = None) -> Config:
    """
    Load a JSON configuration file, or the defaults when no path is given.

    Args:
        path: Config file location

    Returns:
        Validated Config

    Raises:
        ConfigError: file missing, not JSON, or failing validation
    """
    if path is None:
        return Config()

    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = orjson.loads(path.read_bytes())
    except (OSError, orjson.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")

    return load_config_data(data)
