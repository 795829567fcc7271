"""Configuration for splitner.

Two layers of configuration exist:

* ``SplitNerSettings`` holds process-wide settings loaded from environment
  variables prefixed ``SPLITNER_`` (logging, worker caps).
* ``RunConfig`` holds one experiment: a flat ``key=value`` file that fully
  describes a training, prediction or benchmarking run. Each ablation of the
  model family is a single key flip in this file.
"""

from pathlib import Path
from typing import Any
from typing import Literal

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import ValidationError
from pydantic import field_validator
from pydantic import model_validator
from pydantic_settings import BaseSettings
from pydantic_settings import SettingsConfigDict

from splitner.exceptions import ConfigurationError

DEFAULT_QUESTION = "Extract important entity spans from the following text"

VariantName = Literal[
    "split_qa_qa",
    "split_qa_nocharpattern_qa",
    "split_seqtag_qa",
    "single_qa",
    "single_seqtag",
]


class SplitNerSettings(BaseSettings):
    """Process configuration loaded from environment variables.

    All values can be overridden via environment variables prefixed with
    SPLITNER_ (e.g., SPLITNER_LOG_LEVEL=DEBUG, SPLITNER_THREADS=4).
    """

    model_config = SettingsConfigDict(
        env_prefix="SPLITNER_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging Configuration
    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)",
    )
    log_format: str = Field(
        default="json",
        description=(
            "Log format: 'json' for structured logging or 'text' for human-readable"
        ),
    )

    # Concurrency
    threads: int = Field(
        default=1,
        ge=1,
        description="Maximum number of inference workers",
    )
    torch_threads: int = Field(
        default=1,
        ge=1,
        description="Intra-op threads used by torch (1 keeps training bitwise reproducible)",
    )


# Global configuration instance
_config: SplitNerSettings | None = None


def get_config() -> SplitNerSettings:
    """Get the global settings instance.

    Returns:
        The process settings singleton.
    """
    global _config
    if _config is None:
        _config = SplitNerSettings()
    return _config


def reload_config() -> SplitNerSettings:
    """Reload settings from environment.

    Returns:
        The reloaded settings instance.
    """
    global _config
    _config = SplitNerSettings()
    return _config


class RunConfig(BaseModel):
    """One experiment, parsed from a flat key=value file.

    Training defaults are batch size 16, maximum sequence length 256, dice
    loss with smoothing 1.0 for the span classifier and Adam with learning
    rate 5e-5. Encoder sizes default to a desk-scale transformer.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Model family
    variant: VariantName = "split_qa_qa"
    question_text: str = DEFAULT_QUESTION
    char_feature: bool = True
    pattern_feature: bool = True
    classifier_loss: Literal["dice", "cross_entropy"] = "dice"
    gamma: float = Field(default=1.0, gt=0)

    # Training
    batch_size: int = Field(default=16, ge=1)
    max_seq_len: int = Field(default=256, ge=8)
    epochs: int = Field(default=20, ge=1)
    seed: int = Field(default=42, ge=0)
    lr: float = Field(default=5e-5, gt=0)
    optimizer: Literal["adam", "sgd"] = "adam"
    lr_schedule: Literal["constant", "linear_decay"] = "constant"

    # Encoder
    encoder_layers: int = Field(default=2, ge=1)
    encoder_heads: int = Field(default=4, ge=1)
    encoder_hidden: int = Field(default=128, ge=8)
    encoder_ff: int = Field(default=256, ge=8)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)

    # Vocabulary
    vocab_size: int = Field(default=4000, ge=4)
    vocab_path: str = ""
    lowercase: bool = False

    # Data and artifacts
    train_path: str = ""
    test_path: str = ""
    gold_path: str = ""
    prediction_path: str = ""
    detector_checkpoint: str = ""
    classifier_checkpoint: str = ""

    # Benchmarking
    benchmark_variants: list[VariantName] = Field(
        default_factory=lambda: ["split_qa_qa", "single_qa"]
    )
    benchmark_runs: int = Field(default=10, ge=1)

    # Synthetic corpus
    synthetic_sentences: int = Field(default=200, ge=1)
    synthetic_density: float = Field(default=2.0, ge=0.0)
    synthetic_types: str = (
        "ORG:all_caps,NUM:digits,LOC:capitalized_bigram,PER:capitalized"
    )

    @field_validator("benchmark_variants", mode="before")
    @classmethod
    def _split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @model_validator(mode="after")
    def _check_encoder(self) -> "RunConfig":
        if self.encoder_hidden % self.encoder_heads != 0:
            raise ValueError(
                f"encoder_hidden ({self.encoder_hidden}) must be divisible by "
                f"encoder_heads ({self.encoder_heads})"
            )
        if self.encoder_hidden % 2 != 0:
            raise ValueError("encoder_hidden must be even (bidirectional pattern LSTM)")
        return self

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        """Parse a flat key=value configuration text.

        Args:
            text: Configuration content

        Returns:
            Validated RunConfig

        Raises:
            ConfigurationError: On syntax errors, duplicate or unknown keys,
                or invalid values
        """
        values: dict[str, str] = {}
        for line_number, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigurationError(
                    f"line {line_number}: expected key=value, got {line!r}"
                )
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigurationError(f"line {line_number}: empty key")
            if key in values:
                raise ConfigurationError(f"line {line_number}: duplicate key {key!r}")
            values[key] = value
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict[str, Any]) -> "RunConfig":
        """Validate a mapping of raw values.

        Args:
            values: Raw configuration values

        Returns:
            Validated RunConfig

        Raises:
            ConfigurationError: If validation fails
        """
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(part) for part in error['loc']) or 'config'}: "
                f"{error['msg']}"
                for error in e.errors()
            )
            raise ConfigurationError(f"invalid config: {problems}") from e

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        """Load a configuration file.

        Args:
            path: Path to the key=value file

        Returns:
            Validated RunConfig

        Raises:
            ConfigurationError: If the file cannot be read or is invalid
        """
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"cannot read config {path}: {e}") from e
        return cls.from_text(text)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a validated copy with some keys replaced.

        Args:
            **overrides: Keys to replace

        Returns:
            New RunConfig
        """
        data = self.model_dump()
        data.update({key: value for key, value in overrides.items() if value is not None})
        return type(self).from_mapping(data)

    def dump(self) -> str:
        """Render the canonical key=value form of this configuration.

        Returns:
            Configuration text, one key per line in field order
        """
        lines = []
        for name in type(self).model_fields:
            value = getattr(self, name)
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, list):
                rendered = ",".join(str(item) for item in value)
            else:
                rendered = str(value)
            lines.append(f"{name} = {rendered}")
        return "\n".join(lines) + "\n"
