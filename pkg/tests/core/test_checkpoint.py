"""
Tests for checkpoint persistence.
"""

import math

import numpy as np
import pytest

from embedlab.config import EncoderConfig
from embedlab.core.checkpoint import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    Checkpoint,
    checkpoint_from_bytes,
    checkpoint_to_bytes,
    load_checkpoint,
    save_checkpoint,
)
from embedlab.core.container import encode_container
from embedlab.core.encoder import EncoderWeights
from embedlab.core.tokenizer import Vocabulary
from embedlab.errors import FormatError


def _f32(array: np.ndarray) -> np.ndarray:
    return np.asarray(array, dtype=np.float32).astype(np.float64)


@pytest.fixture
def checkpoint(tiny_encoder_config: EncoderConfig) -> Checkpoint:
    weights = EncoderWeights.init(tiny_encoder_config, np.random.default_rng(2)).to_arrays()
    weights = {k: _f32(v) for k, v in weights.items()}
    return Checkpoint(
        encoder_config=tiny_encoder_config,
        vocab=Vocabulary(max_seq_len=tiny_encoder_config.max_seq_len),
        weights=weights,
        tau=float(np.float32(math.log(1 / 0.07))),
        step=12,
        adam_t=12,
        adam_m={k: _f32(v * 0.5) for k, v in weights.items()},
        adam_v={k: _f32(v * v) for k, v in weights.items()},
        rng={"seed": 3, "epoch": 1, "batch": 2},
        train_config={"batch_size": 4, "seed": 3},
    )


class TestRoundTrip:
    """Tests for save/load fidelity."""

    def test_bytes_round_trip(self, checkpoint):
        """Test every field survives serialization exactly."""
        restored = checkpoint_from_bytes(checkpoint_to_bytes(checkpoint))
        assert restored.encoder_config == checkpoint.encoder_config
        assert restored.vocab == checkpoint.vocab
        assert restored.tau == checkpoint.tau
        assert (restored.step, restored.adam_t) == (12, 12)
        assert restored.rng == checkpoint.rng
        assert restored.train_config == checkpoint.train_config
        for group in ("weights", "adam_m", "adam_v"):
            original, loaded = getattr(checkpoint, group), getattr(restored, group)
            assert set(original) == set(loaded)
            assert all(np.array_equal(original[k], loaded[k]) for k in original)

    def test_file_round_trip(self, checkpoint, tmp_path):
        """Test the on-disk format starts with the checkpoint magic."""
        path = save_checkpoint(checkpoint, tmp_path / "run.cpte")
        assert path.read_bytes()[:4] == CHECKPOINT_MAGIC
        assert load_checkpoint(path).exp_tau == pytest.approx(1 / 0.07, rel=1e-6)

    def test_save_load_save_is_byte_identical(self, checkpoint, tmp_path):
        """Test rewriting a loaded checkpoint reproduces the file exactly."""
        first = save_checkpoint(checkpoint, tmp_path / "a.cpte")
        second = save_checkpoint(load_checkpoint(first), tmp_path / "b.cpte")
        assert first.read_bytes() == second.read_bytes()
        payload = checkpoint_to_bytes(checkpoint)
        assert checkpoint_to_bytes(checkpoint_from_bytes(payload)) == payload

    def test_weights_load_into_encoder(self, checkpoint):
        """Test restored weights validate against the stored config."""
        restored = checkpoint_from_bytes(checkpoint_to_bytes(checkpoint))
        EncoderWeights.from_arrays(restored.weights, restored.encoder_config)


class TestCorruptCheckpoints:
    """Tests for refusing bad checkpoint files."""

    def test_truncated(self, checkpoint):
        """Test a truncated checkpoint."""
        with pytest.raises(FormatError):
            checkpoint_from_bytes(checkpoint_to_bytes(checkpoint)[:-10])

    def test_index_file_is_not_a_checkpoint(self):
        """Test a container with another magic."""
        payload = encode_container(b"CPTI", 1, {}, [])
        with pytest.raises(FormatError, match="bad magic"):
            checkpoint_from_bytes(payload)

    def test_missing_temperature(self, checkpoint):
        """Test a checkpoint without tau."""
        metadata = {
            "kind": "checkpoint",
            "encoder_config": checkpoint.encoder_config.model_dump(mode="json"),
            "vocab": checkpoint.vocab.to_dict(),
            "step": 0,
            "adam_t": 0,
        }
        payload = encode_container(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, metadata, [])
        with pytest.raises(FormatError, match="temperature"):
            checkpoint_from_bytes(payload)

    def test_invalid_metadata(self):
        """Test metadata that does not describe a valid encoder."""
        metadata = {"encoder_config": {"d_model": 7, "n_heads": 2}, "vocab": {}, "step": 0, "adam_t": 0}
        payload = encode_container(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, metadata, [("tau", np.array(1.0), "<f4")])
        with pytest.raises(FormatError, match="invalid checkpoint metadata"):
            checkpoint_from_bytes(payload)

    def test_unexpected_tensor(self, checkpoint):
        """Test an array outside the known groups."""
        metadata = {
            "encoder_config": checkpoint.encoder_config.model_dump(mode="json"),
            "vocab": checkpoint.vocab.to_dict(),
            "step": 0,
            "adam_t": 0,
        }
        arrays = [("tau", np.array(1.0), "<f4"), ("optimizer/lr", np.array(1.0), "<f4")]
        payload = encode_container(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, metadata, arrays)
        with pytest.raises(FormatError, match="unexpected tensor"):
            checkpoint_from_bytes(payload)
