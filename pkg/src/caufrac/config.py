"""Run settings shared by every command.

Settings come from ``--config FILE`` (YAML whose keys are `RunConfig` fields),
overridden by flags given on the command line, with defaults for the rest.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from typing_extensions import Self

from caufrac._yaml_utils import load_document
from caufrac.arithmetic import DEFAULT_TOLERANCE, Arithmetic
from caufrac.errors import ConfigError, SchemaError
from caufrac.fraction import MethodChoice
from caufrac.scenario import DEFAULT_SECTION_CAP
from caufrac.stats import DEFAULT_BINS, DEFAULT_THRESHOLD, Alternative

CONFIG_SUFFIXES = (".yaml", ".yml")


def default_jobs() -> int:
    return os.cpu_count() or 1


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str | None = Field(default=None, description="Command being run")
    inputs: list[Path] = Field(default_factory=list, description="Input files")
    output: Path | None = Field(default=None, description="Output directory")
    arithmetic: Arithmetic | None = Field(
        default=None,
        description="Arithmetic of the computation, the command's default if unset",
    )
    tolerance: float = Field(
        default=DEFAULT_TOLERANCE, description="Comparison slack in float mode"
    )
    method: MethodChoice = MethodChoice.auto
    threshold: float = Field(
        default=DEFAULT_THRESHOLD, description="Fraction counted as high in summaries"
    )
    drop_neutral: bool = Field(
        default=False, description="Leave out neutral scores when aggregating"
    )
    jobs: int = Field(default_factory=default_jobs, description="Worker processes")
    alternative: Alternative = Alternative.two_sided
    bins: int = Field(default=DEFAULT_BINS, description="Histogram bins on [0, 1]")
    section_cap: int = Field(
        default=DEFAULT_SECTION_CAP, description="Most sections to enumerate"
    )
    witness: bool = Field(
        default=False, description="Embed witness models in fraction reports"
    )

    @model_validator(mode="after")
    def _check_ranges(self) -> Self:
        if self.tolerance <= 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance}")
        if not 0 <= self.threshold <= 1:
            raise ConfigError(f"threshold must be in [0, 1], got {self.threshold}")
        for name in ("jobs", "bins", "section_cap"):
            if getattr(self, name) < 1:
                raise ConfigError(
                    f"{name} must be at least 1, got {getattr(self, name)}"
                )

        return self

    @classmethod
    def load(cls, path: Path | None = None, **overrides: Any) -> RunConfig:
        """Merge a config file with explicit overrides; `None` overrides are unset.

        Raises:
            ConfigError: If the file or the merged settings are invalid

        """
        values: dict[str, Any] = {}
        if path is not None:
            if path.suffix not in CONFIG_SUFFIXES:
                raise ConfigError(
                    f"Expected '{path.name}' to end with one of {CONFIG_SUFFIXES}",
                    str(path),
                )
            try:
                values = load_document(path)
            except SchemaError as e:
                raise ConfigError(e.message, e.location) from None

        values.update(
            {key: value for key, value in overrides.items() if value is not None}
        )
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            error = e.errors()[0]
            raise ConfigError(
                f"Invalid setting: {error['msg']}",
                ".".join(str(part) for part in error["loc"]),
            ) from None
