"""
Configuration management for embedlab.

This module provides Pydantic-based configuration schemas for validating
and loading TOML configuration files used by the embedlab CLI.

Key exports:
- RunConfig: Root configuration
- EncoderConfig, TrainConfig, IndexConfig, EvalConfig, DataConfig: Sections
- load_config(): Load and validate a configuration file
- apply_overrides(): Merge command-line flags on top of a configuration
"""

from .defaults import (
    CHECKPOINT_SUFFIX,
    DEFAULT_BATCH_SIZE,
    DEFAULT_CODE_SEARCH_POOL,
    DEFAULT_EMBED_BATCH_SIZE,
    DEFAULT_GRAPH_BEAM,
    DEFAULT_GRAPH_DEGREE,
    DEFAULT_KNN_K,
    DEFAULT_MAX_SEQ_LEN,
    DEFAULT_RETRIEVAL_KS,
    ENV_CONFIG,
    ENV_LOG_FILE,
    INDEX_SUFFIX,
    METRICS_SUFFIX,
)
from .schema import (
    BYTE_VOCAB_SIZE,
    DataConfig,
    EncoderConfig,
    EvalConfig,
    IndexConfig,
    RunConfig,
    TrainConfig,
    apply_overrides,
    load_config,
)

__all__ = [
    # Models
    "RunConfig",
    "EncoderConfig",
    "TrainConfig",
    "IndexConfig",
    "EvalConfig",
    "DataConfig",
    # Loaders
    "load_config",
    "apply_overrides",
    # Defaults
    "BYTE_VOCAB_SIZE",
    "DEFAULT_BATCH_SIZE",
    "DEFAULT_CODE_SEARCH_POOL",
    "DEFAULT_EMBED_BATCH_SIZE",
    "DEFAULT_GRAPH_BEAM",
    "DEFAULT_GRAPH_DEGREE",
    "DEFAULT_KNN_K",
    "DEFAULT_MAX_SEQ_LEN",
    "DEFAULT_RETRIEVAL_KS",
    "CHECKPOINT_SUFFIX",
    "INDEX_SUFFIX",
    "METRICS_SUFFIX",
    # Environment variables
    "ENV_CONFIG",
    "ENV_LOG_FILE",
]
