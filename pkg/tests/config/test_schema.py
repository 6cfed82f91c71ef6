"""
Tests for the configuration module.

This module tests the Pydantic configuration schema for:
- Encoder, training, index and evaluation sections
- Data paths and their resolution against the config file
- Loading TOML files and applying command-line overrides
"""

import json
import logging
from pathlib import Path

import pytest
from pydantic import ValidationError

from embedlab.config import (
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
from embedlab.errors import ConfigError


class TestEncoderConfig:
    """Tests for EncoderConfig validation."""

    def test_defaults(self):
        """Test the desk-scale defaults."""
        config = EncoderConfig()
        assert (config.n_layers, config.d_model, config.n_heads) == (2, 64, 4)
        assert config.vocab_size == BYTE_VOCAB_SIZE
        assert config.attention_mode == "causal"
        assert config.head_dim == 16

    def test_heads_must_divide_width(self):
        """Test d_model must be a multiple of n_heads."""
        with pytest.raises(ValidationError, match="divisible by n_heads"):
            EncoderConfig(d_model=30, n_heads=4)

    def test_ffn_width(self):
        """Test d_ff below d_model is rejected."""
        with pytest.raises(ValidationError, match="d_ff"):
            EncoderConfig(d_model=64, d_ff=32)

    def test_vocab_covers_bytes(self):
        """Test the vocabulary cannot be smaller than bytes plus delimiters."""
        with pytest.raises(ValidationError, match="vocab_size"):
            EncoderConfig(vocab_size=256)

    def test_attention_mode(self):
        """Test only causal and bidirectional attention are accepted."""
        assert EncoderConfig(attention_mode="bidirectional").attention_mode == "bidirectional"
        with pytest.raises(ValidationError, match="attention_mode"):
            EncoderConfig(attention_mode="sparse")

    def test_unknown_key(self):
        """Test unknown keys are rejected."""
        with pytest.raises(ValidationError, match="extra"):
            EncoderConfig(width=8)


class TestTrainConfig:
    """Tests for TrainConfig validation."""

    def test_defaults(self):
        """Test optimizer defaults."""
        config = TrainConfig()
        assert config.batch_size == 32
        assert (config.beta1, config.beta2, config.adam_eps) == (0.9, 0.98, 1e-8)
        assert config.warmup_fraction == 0.1
        assert config.grad_clip_norm == 1.0

    def test_clip_must_be_positive(self):
        """Test a non-positive clipping threshold is rejected; None disables clipping."""
        assert TrainConfig(grad_clip_norm=None).grad_clip_norm is None
        with pytest.raises(ValidationError, match="grad_clip_norm must be positive"):
            TrainConfig(grad_clip_norm=0.0)

    def test_initial_scale_within_clamp(self):
        """Test 1/init_temperature may not exceed max_logit_scale."""
        with pytest.raises(ValidationError, match="exceeds max_logit_scale"):
            TrainConfig(init_temperature=0.001, max_logit_scale=100.0)

    def test_single_pair_batches_warn(self, caplog):
        """Test batch_size=1 is allowed with a warning."""
        with caplog.at_level(logging.WARNING):
            TrainConfig(batch_size=1)
        assert "no in-batch negatives" in caplog.text

    @pytest.mark.parametrize("field,value", [("batch_size", 0), ("learning_rate", 0.0), ("beta2", 1.0)])
    def test_out_of_range(self, field, value):
        """Test numeric bounds."""
        with pytest.raises(ValidationError, match=field):
            TrainConfig(**{field: value})


class TestEvalConfig:
    """Tests for EvalConfig and IndexConfig validation."""

    def test_ks_sorted_unique(self):
        """Test cutoffs are normalized."""
        assert EvalConfig(ks=[10, 1, 10]).ks == [1, 10]

    @pytest.mark.parametrize("ks", [[], [0, 5]])
    def test_bad_ks(self, ks):
        """Test empty or non-positive cutoffs are rejected."""
        with pytest.raises(ValidationError):
            EvalConfig(ks=ks)

    def test_template_slot(self):
        """Test the zero-shot template needs exactly one slot."""
        assert EvalConfig(zero_shot_template="a {label} review").zero_shot_template == "a {label} review"
        with pytest.raises(ValidationError, match="exactly one"):
            EvalConfig(zero_shot_template="no slot")

    def test_index_mode(self):
        """Test the index mode and degree bounds."""
        assert IndexConfig(mode="graph").mode == "graph"
        with pytest.raises(ValidationError):
            IndexConfig(mode="tree")
        with pytest.raises(ValidationError):
            IndexConfig(degree=1)


class TestDataConfig:
    """Tests for DataConfig path validation."""

    def test_existing_path(self, tmp_path: Path):
        """Test an existing file is accepted."""
        path = tmp_path / "pairs.jsonl"
        path.write_text("")
        assert DataConfig(train=str(path)).train == str(path)

    def test_missing_path(self, tmp_path: Path):
        """Test a missing file is rejected."""
        with pytest.raises(ValidationError, match="file not found"):
            DataConfig(corpus=str(tmp_path / "absent.jsonl"))

    def test_blank_path(self):
        """Test a blank path is rejected."""
        with pytest.raises(ValidationError, match="path cannot be empty"):
            DataConfig(qrels="  ")


class TestLoadConfig:
    """Tests for load_config function."""

    def test_load_valid_config(self, tmp_path: Path):
        """Test loading a complete configuration file."""
        config_file = tmp_path / "run.toml"
        config_file.write_text(
            """
[train]
batch_size = 64
total_steps = 200

[train.encoder]
n_layers = 1
d_model = 32
d_ff = 64

[index]
mode = "graph"
degree = 8

[eval]
ks = [1, 5]
"""
        )
        config = load_config(config_file)
        assert config.train.batch_size == 64
        assert config.train.encoder.d_model == 32
        assert config.index.mode == "graph"
        assert config.eval.ks == [1, 5]

    def test_resolve_relative_paths(self, tmp_path: Path):
        """Test [data] paths are resolved against the config file's directory."""
        (tmp_path / "data").mkdir()
        (tmp_path / "data" / "pairs.jsonl").write_text("")
        config_file = tmp_path / "run.toml"
        config_file.write_text('[data]\ntrain = "data/pairs.jsonl"\n')

        config = load_config(config_file)
        assert Path(config.data.train) == (tmp_path / "data" / "pairs.jsonl").resolve()

    def test_missing_data_file(self, tmp_path: Path):
        """Test a [data] path that does not exist fails validation."""
        config_file = tmp_path / "run.toml"
        config_file.write_text('[data]\ncorpus = "nowhere.jsonl"\n')
        with pytest.raises(ValidationError, match="file not found"):
            load_config(config_file)

    def test_unknown_section(self, tmp_path: Path):
        """Test unknown top-level sections are rejected."""
        config_file = tmp_path / "run.toml"
        config_file.write_text("[server]\nport = 80\n")
        with pytest.raises(ValidationError, match="server"):
            load_config(config_file)

    def test_missing_config_file(self, tmp_path: Path):
        """Test error when the config file doesn't exist."""
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nonexistent.toml")

    def test_invalid_toml(self, tmp_path: Path):
        """Test error for invalid TOML syntax."""
        config_file = tmp_path / "invalid.toml"
        config_file.write_text("[train\nbatch_size = ")
        with pytest.raises(ConfigError, match="Invalid TOML"):
            load_config(config_file)

    def test_defaults_without_file(self, monkeypatch):
        """Test built-in defaults when neither a path nor the env variable is set."""
        monkeypatch.delenv("EMBEDLAB_CONFIG", raising=False)
        assert load_config() == RunConfig()

    def test_env_variable(self, tmp_path: Path, monkeypatch):
        """Test EMBEDLAB_CONFIG is used when no path is given."""
        config_file = tmp_path / "env.toml"
        config_file.write_text("[train]\nseed = 7\n")
        monkeypatch.setenv("EMBEDLAB_CONFIG", str(config_file))
        assert load_config().train.seed == 7


class TestApplyOverrides:
    """Tests for command-line overrides."""

    def test_override_values(self):
        """Test dotted keys replace values at any depth."""
        config = apply_overrides(
            RunConfig(), {"train.batch_size": 8, "train.encoder.n_layers": 3, "index.mode": "graph"}
        )
        assert config.train.batch_size == 8
        assert config.train.encoder.n_layers == 3
        assert config.index.mode == "graph"

    def test_none_ignored(self):
        """Test unset flags leave values alone."""
        base = RunConfig()
        assert apply_overrides(base, {"train.batch_size": None}) == base

    def test_original_unchanged(self):
        """Test overrides return a new object."""
        base = RunConfig()
        apply_overrides(base, {"train.seed": 5})
        assert base.train.seed == 0

    @pytest.mark.parametrize("key", ["train.width", "nothing.batch_size", "train.batch_size.inner"])
    def test_unknown_key(self, key):
        """Test unknown keys and sections are configuration errors."""
        with pytest.raises(ConfigError, match="Unknown configuration"):
            apply_overrides(RunConfig(), {key: 1})

    def test_revalidated(self):
        """Test invalid override values fail validation."""
        with pytest.raises(ValidationError):
            apply_overrides(RunConfig(), {"train.encoder.d_model": 30})

    def test_to_json(self):
        """Test the resolved config serializes to sorted JSON."""
        payload = json.loads(RunConfig().to_json())
        assert payload["train"]["encoder"]["d_model"] == 64
        assert list(payload) == sorted(payload)
