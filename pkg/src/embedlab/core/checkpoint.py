"""
Checkpoint save/load.

A checkpoint holds everything needed to resume training bit-identically:
encoder config, vocabulary, encoder weights, temperature, Adam moments,
step counter and data-order RNG state. Arrays are stored as little-endian
float32 and promoted to float64 on load; the trainer keeps its live state
at float32 precision so nothing is lost in the round trip.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from embedlab.config.schema import EncoderConfig
from embedlab.errors import FormatError, TokenizationError

from .container import decode_container, encode_container, read_container, write_container
from .tokenizer import Vocabulary

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"CPTE"
CHECKPOINT_VERSION = 1
STORAGE_DTYPE = "<f4"


@dataclass
class Checkpoint:
    """Complete training state at one step."""

    encoder_config: EncoderConfig
    vocab: Vocabulary
    weights: dict[str, np.ndarray]
    tau: float
    step: int = 0
    adam_t: int = 0
    adam_m: dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: dict[str, np.ndarray] = field(default_factory=dict)
    rng: dict[str, int] = field(default_factory=dict)
    train_config: dict[str, Any] | None = None

    @property
    def exp_tau(self) -> float:
        return float(np.exp(self.tau))


def _arrays(ckpt: Checkpoint) -> list[tuple[str, np.ndarray, str]]:
    arrays = [(f"weights/{k}", v, STORAGE_DTYPE) for k, v in ckpt.weights.items()]
    arrays.append(("tau", np.array(ckpt.tau), STORAGE_DTYPE))
    arrays += [(f"adam_m/{k}", v, STORAGE_DTYPE) for k, v in ckpt.adam_m.items()]
    arrays += [(f"adam_v/{k}", v, STORAGE_DTYPE) for k, v in ckpt.adam_v.items()]
    return arrays


def _metadata_for(ckpt: Checkpoint) -> dict[str, Any]:
    return {
        "kind": "checkpoint",
        "encoder_config": ckpt.encoder_config.model_dump(mode="json"),
        "vocab": ckpt.vocab.to_dict(),
        "step": int(ckpt.step),
        "adam_t": int(ckpt.adam_t),
        "rng": {k: int(v) for k, v in ckpt.rng.items()},
        "train_config": ckpt.train_config,
    }


def _from_parts(metadata: dict[str, Any], arrays: dict[str, np.ndarray], source: str) -> Checkpoint:
    try:
        encoder_config = EncoderConfig.model_validate(metadata["encoder_config"])
        vocab = Vocabulary.from_dict(metadata["vocab"])
        step, adam_t = int(metadata["step"]), int(metadata["adam_t"])
        rng = {k: int(v) for k, v in metadata.get("rng", {}).items()}
    except (KeyError, TypeError, ValueError, ValidationError, TokenizationError) as e:
        raise FormatError(f"{source}: invalid checkpoint metadata: {e}") from e

    groups: dict[str, dict[str, np.ndarray]] = {"weights": {}, "adam_m": {}, "adam_v": {}}
    tau = None
    for name, arr in arrays.items():
        if name == "tau":
            tau = float(arr)
            continue
        group, _, key = name.partition("/")
        if group not in groups or not key:
            raise FormatError(f"{source}: unexpected tensor {name}")
        groups[group][key] = arr
    if tau is None:
        raise FormatError(f"{source}: checkpoint has no temperature")

    return Checkpoint(
        encoder_config=encoder_config,
        vocab=vocab,
        weights=groups["weights"],
        tau=tau,
        step=step,
        adam_t=adam_t,
        adam_m=groups["adam_m"],
        adam_v=groups["adam_v"],
        rng=rng,
        train_config=metadata.get("train_config"),
    )


def checkpoint_to_bytes(ckpt: Checkpoint) -> bytes:
    return encode_container(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, _metadata_for(ckpt), _arrays(ckpt))


def checkpoint_from_bytes(payload: bytes, source: str = "<bytes>") -> Checkpoint:
    metadata, arrays = decode_container(payload, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, source)
    return _from_parts(metadata, arrays, source)


def save_checkpoint(ckpt: Checkpoint, path: Path) -> Path:
    """Atomically write a checkpoint file."""
    write_container(Path(path), CHECKPOINT_MAGIC, CHECKPOINT_VERSION, _metadata_for(ckpt), _arrays(ckpt))
    logger.info(f"Saved checkpoint at step {ckpt.step} to {path}")
    return Path(path)


def load_checkpoint(path: Path) -> Checkpoint:
    """
    Read a checkpoint file.

    Raises:
        FormatError: On corrupt, truncated or version-mismatched files
    """
    metadata, arrays = read_container(Path(path), CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    ckpt = _from_parts(metadata, arrays, str(path))
    logger.info(f"Loaded checkpoint at step {ckpt.step} from {path}")
    return ckpt
