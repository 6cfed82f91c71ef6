"""
Training for embedlab.

This module contains:
- The contrastive training loop (Adam, warmup, gradient clipping, deterministic batching)
- Checkpoint-compatible resume and warm start
- The batch-size ablation runner
"""

from .ablation import ABLATION_METRICS, batch_size_ablation
from .trainer import (
    EVAL_METRIC,
    METRIC_COLUMNS,
    Adam,
    BatchSampler,
    Trainer,
    TrainResult,
    clip_grad_norm,
    encode_pairs,
    global_grad_norm,
    snap_float32,
    train,
    warmup_lr,
)

__all__ = [
    "ABLATION_METRICS",
    "EVAL_METRIC",
    "METRIC_COLUMNS",
    "Adam",
    "BatchSampler",
    "TrainResult",
    "Trainer",
    "batch_size_ablation",
    "clip_grad_norm",
    "encode_pairs",
    "global_grad_norm",
    "snap_float32",
    "train",
    "warmup_lr",
]
