"""
Pytest configuration and shared fixtures for the test suite.

Models here are deliberately tiny so that forward/backward passes through
the numpy autodiff stay fast; the default desk-scale encoder is only used
by tests marked slow.
"""

import logging

import numpy as np
import pytest

from embedlab.config import EncoderConfig, TrainConfig
from embedlab.core import EmbeddingModel, EncoderWeights, Vocabulary
from embedlab.data import PairExample, generate_noisy_pairs


@pytest.fixture(autouse=True)
def setup_logging() -> None:
    """Configure logging for tests."""
    logging.basicConfig(
        level=logging.WARNING,  # Reduce noise during tests
        format="%(name)s - %(levelname)s - %(message)s",
    )


@pytest.fixture
def tiny_encoder_config() -> EncoderConfig:
    """One layer, two heads, width 8, sequences up to 24 ids."""
    return EncoderConfig(n_layers=1, n_heads=2, d_model=8, d_ff=16, max_seq_len=24)


@pytest.fixture
def tiny_train_config(tiny_encoder_config: EncoderConfig) -> TrainConfig:
    """A few steps of training on the tiny encoder."""
    return TrainConfig(
        batch_size=4,
        total_steps=6,
        learning_rate=1e-2,
        seed=3,
        encoder=tiny_encoder_config,
    )


@pytest.fixture
def tiny_model(tiny_encoder_config: EncoderConfig) -> EmbeddingModel:
    """Randomly initialized inference model."""
    weights = EncoderWeights.init(tiny_encoder_config, np.random.default_rng(0))
    return EmbeddingModel(
        config=tiny_encoder_config,
        vocab=Vocabulary(max_seq_len=tiny_encoder_config.max_seq_len),
        weights=weights,
    )


@pytest.fixture
def synthetic_pairs() -> list[PairExample]:
    """Twenty short noisy-copy pairs."""
    return generate_noisy_pairs(20, seed=11, min_words=1, max_words=3)
