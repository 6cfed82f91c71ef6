"""
Pydantic models for embedlab configuration files.

This module defines the configuration schema using Pydantic v2. It validates
TOML configuration files and provides type-safe access to configuration values.

The configuration hierarchy:
- RunConfig: root, one section per concern
  - [train] TrainConfig, with [train.encoder] EncoderConfig
  - [index] IndexConfig
  - [eval] EvalConfig
  - [data] DataConfig (input paths, must exist)

Unknown keys are rejected in every section.
"""

import json
import logging
import os
import tomllib
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from embedlab.errors import ConfigError

from .defaults import (
    DEFAULT_ADAM_EPS,
    DEFAULT_ATTENTION_MODE,
    DEFAULT_BATCH_SIZE,
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_CODE_SEARCH_POOL,
    DEFAULT_D_FF,
    DEFAULT_D_MODEL,
    DEFAULT_GRAD_CLIP_NORM,
    DEFAULT_GRAPH_BEAM,
    DEFAULT_GRAPH_DEGREE,
    DEFAULT_INDEX_MODE,
    DEFAULT_INIT_STD,
    DEFAULT_INIT_TEMPERATURE,
    DEFAULT_KNN_K,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_LOGIT_SCALE,
    DEFAULT_MAX_SEQ_LEN,
    DEFAULT_N_HEADS,
    DEFAULT_N_LAYERS,
    DEFAULT_PROBE_L2,
    DEFAULT_PROBE_LR,
    DEFAULT_PROBE_STEPS,
    DEFAULT_RETRIEVAL_KS,
    DEFAULT_SEED,
    DEFAULT_TOTAL_STEPS,
    DEFAULT_WARMUP_FRACTION,
    ENV_CONFIG,
)

logger = logging.getLogger(__name__)

# 256 byte values + SOS_X, EOS_X, SOS_Y, EOS_Y, PAD
BYTE_VOCAB_SIZE = 261


class EncoderConfig(BaseModel):
    """Architecture of the Transformer encoder."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_layers: int = Field(default=DEFAULT_N_LAYERS, ge=1)
    n_heads: int = Field(default=DEFAULT_N_HEADS, ge=1)
    d_model: int = Field(default=DEFAULT_D_MODEL, ge=1)
    d_ff: int = Field(default=DEFAULT_D_FF, ge=1)
    max_seq_len: int = Field(default=DEFAULT_MAX_SEQ_LEN, ge=3, description="Includes the two delimiters")
    vocab_size: int = Field(default=BYTE_VOCAB_SIZE, ge=BYTE_VOCAB_SIZE)
    attention_mode: Literal["causal", "bidirectional"] = DEFAULT_ATTENTION_MODE
    init_std: float = Field(default=DEFAULT_INIT_STD, gt=0)

    @model_validator(mode="after")
    def validate_dimensions(self) -> "EncoderConfig":
        """Ensure heads divide the model width and the FFN is at least as wide."""
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})")
        if self.d_ff < self.d_model:
            raise ValueError(f"d_ff ({self.d_ff}) must be >= d_model ({self.d_model})")
        return self

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads


class TrainConfig(BaseModel):
    """Optimizer, schedule and bookkeeping settings for contrastive training."""

    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=1, description="M, pairs per batch")
    learning_rate: float = Field(default=DEFAULT_LEARNING_RATE, gt=0)
    beta1: float = Field(default=DEFAULT_BETA1, ge=0, lt=1)
    beta2: float = Field(default=DEFAULT_BETA2, ge=0, lt=1)
    adam_eps: float = Field(default=DEFAULT_ADAM_EPS, gt=0)
    warmup_fraction: float = Field(default=DEFAULT_WARMUP_FRACTION, ge=0, le=1)
    total_steps: int = Field(default=DEFAULT_TOTAL_STEPS, ge=1)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    grad_clip_norm: float | None = Field(default=DEFAULT_GRAD_CLIP_NORM, description="None disables clipping")
    init_temperature: float = Field(default=DEFAULT_INIT_TEMPERATURE, gt=0)
    max_logit_scale: float = Field(default=DEFAULT_MAX_LOGIT_SCALE, gt=0)
    eval_every: int = Field(default=0, ge=0, description="Held-out MRR@10 every N steps (0 = off)")
    checkpoint_every: int = Field(default=0, ge=0, description="Periodic checkpoint every N steps (0 = off)")
    init_from: str | None = Field(default=None, description="Checkpoint to warm-start encoder weights from")
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)

    @field_validator("grad_clip_norm")
    @classmethod
    def validate_grad_clip_norm(cls, v: float | None) -> float | None:
        """Ensure the clipping threshold is positive if provided."""
        if v is not None and v <= 0:
            raise ValueError(f"grad_clip_norm must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def validate_temperature(self) -> "TrainConfig":
        """The initial logit scale must not exceed the clamp."""
        if 1.0 / self.init_temperature > self.max_logit_scale:
            raise ValueError(
                f"initial logit scale 1/{self.init_temperature} exceeds max_logit_scale {self.max_logit_scale}"
            )
        return self

    @model_validator(mode="after")
    def warn_single_pair_batches(self) -> "TrainConfig":
        """M=1 trains nothing; allowed for smoke tests only."""
        if self.batch_size == 1:
            logger.warning("batch_size=1 gives no in-batch negatives; use only for smoke tests")
        return self


class IndexConfig(BaseModel):
    """Vector index construction settings."""

    model_config = ConfigDict(extra="forbid")

    mode: Literal["flat", "graph"] = DEFAULT_INDEX_MODE
    degree: int = Field(default=DEFAULT_GRAPH_DEGREE, ge=2, description="Graph neighbor degree (layer 0 uses 2x)")
    beam: int = Field(default=DEFAULT_GRAPH_BEAM, ge=1, description="Candidate beam width for build and search")
    seed: int = Field(default=DEFAULT_SEED, ge=0)


class EvalConfig(BaseModel):
    """Evaluation protocol settings."""

    model_config = ConfigDict(extra="forbid")

    ks: list[int] = Field(default_factory=lambda: list(DEFAULT_RETRIEVAL_KS))
    empty_qrels: Literal["skip", "zero"] = Field(default="skip", description="Queries with no relevant docs")
    knn_k: int = Field(default=DEFAULT_KNN_K, ge=1)
    probe_l2: float = Field(default=DEFAULT_PROBE_L2, ge=0)
    probe_steps: int = Field(default=DEFAULT_PROBE_STEPS, ge=1)
    probe_lr: float = Field(default=DEFAULT_PROBE_LR, gt=0)
    zero_shot_template: str | None = None
    code_search_pool: int = Field(default=DEFAULT_CODE_SEARCH_POOL, ge=2)

    @field_validator("ks")
    @classmethod
    def validate_ks(cls, v: list[int]) -> list[int]:
        """Cutoffs must be positive; stored sorted and unique."""
        if not v:
            raise ValueError("ks cannot be empty")
        if any(k < 1 for k in v):
            raise ValueError(f"all cutoffs must be >= 1, got {v}")
        return sorted(set(v))

    @field_validator("zero_shot_template")
    @classmethod
    def validate_template(cls, v: str | None) -> str | None:
        """A prompt template needs exactly one {label} slot."""
        if v is not None and v.count("{label}") != 1:
            raise ValueError("zero_shot_template must contain exactly one '{label}' slot")
        return v


class DataConfig(BaseModel):
    """Input file locations. Every path given must exist."""

    model_config = ConfigDict(extra="forbid")

    train: str | None = Field(default=None, description="Training pairs JSONL")
    held_out: str | None = Field(default=None, description="Held-out pairs JSONL for periodic retrieval eval")
    corpus: str | None = Field(default=None, description="Retrieval corpus JSONL")
    queries: str | None = Field(default=None, description="Retrieval queries JSONL")
    qrels: str | None = Field(default=None, description="Relevance judgments TSV")

    @field_validator("train", "held_out", "corpus", "queries", "qrels")
    @classmethod
    def validate_path_exists(cls, v: str | None) -> str | None:
        """Referenced files must exist at validation time."""
        if v is None:
            return v
        if not v.strip():
            raise ValueError("path cannot be empty")
        if not Path(v).expanduser().exists():
            raise ValueError(f"file not found: {v}")
        return v


class RunConfig(BaseModel):
    """
    Root configuration: merged view of training, index, evaluation and data settings.

    Loaded from a TOML file; CLI flags are applied on top with apply_overrides().
    """

    model_config = ConfigDict(extra="forbid")

    train: TrainConfig = Field(default_factory=TrainConfig)
    index: IndexConfig = Field(default_factory=IndexConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    data: DataConfig = Field(default_factory=DataConfig)

    def to_json(self) -> str:
        """Resolved configuration as pretty JSON (for --print-config)."""
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)


def _resolve_data_paths(raw: dict[str, Any], config_dir: Path) -> None:
    """Make relative [data] paths absolute relative to the config file location."""
    data = raw.get("data")
    if not isinstance(data, dict):
        return
    for key, value in data.items():
        if isinstance(value, str) and value.strip():
            path = Path(value).expanduser()
            if not path.is_absolute():
                data[key] = str((config_dir / path).resolve())
                logger.debug(f"Resolved data.{key}: {data[key]}")


def load_config(config_path: Path | None = None) -> RunConfig:
    """
    Load and validate a run configuration.

    When config_path is None, the EMBEDLAB_CONFIG environment variable is
    consulted; without either, built-in defaults are returned.

    Args:
        config_path: Path to a TOML configuration file

    Returns:
        Validated RunConfig with [data] paths resolved against the file's directory

    Raises:
        ConfigError: If the file is missing or not valid TOML
        pydantic.ValidationError: If the configuration is invalid

    Example:
        >>> config = load_config(Path("run.toml"))
        >>> config.train.encoder.d_model
        64
    """
    if config_path is None:
        env_path = os.getenv(ENV_CONFIG)
        if not env_path:
            logger.debug("No configuration file given; using defaults")
            return RunConfig()
        config_path = Path(env_path)
        logger.debug(f"Using configuration from {ENV_CONFIG}: {config_path}")

    config_path = Path(config_path).expanduser()
    if not config_path.is_file():
        raise ConfigError(f"Configuration file not found: {config_path}")

    logger.info(f"Loading configuration from: {config_path}")

    try:
        with config_path.open("rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in configuration file {config_path}: {e}") from e

    _resolve_data_paths(raw, config_path.parent)

    return RunConfig.model_validate(raw)


def apply_overrides(config: RunConfig, overrides: dict[str, Any]) -> RunConfig:
    """
    Return a new RunConfig with dotted-key overrides applied and re-validated.

    None values are ignored so unset CLI flags leave file values alone.

    Example:
        >>> apply_overrides(config, {"train.batch_size": 64, "index.mode": "graph"})
    """
    raw = config.model_dump()
    for dotted, value in overrides.items():
        if value is None:
            continue
        *parents, leaf = dotted.split(".")
        node = raw
        for part in parents:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"Unknown configuration section in override: {dotted}")
            node = node[part]
        if leaf not in node:
            raise ConfigError(f"Unknown configuration key in override: {dotted}")
        node[leaf] = value
        logger.info(f"{dotted} overridden to: {value}")

    try:
        return RunConfig.model_validate(raw)
    except ValidationError:
        logger.error("Configuration invalid after applying command-line overrides")
        raise
