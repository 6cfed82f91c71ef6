"""
Batch-size ablation: train once per batch size with the same number of
training pairs seen, then score each run on a held-out retrieval set.

Larger batches give each query more in-batch negatives per update; holding
pairs seen fixed means the larger-batch runs take proportionally fewer steps.
"""

import logging
from collections.abc import Sequence

import pandas as pd

from embedlab.config.schema import EvalConfig, IndexConfig, TrainConfig
from embedlab.data.records import PairExample, RetrievalSet
from embedlab.errors import TrainingError
from embedlab.evaluation.retrieval import evaluate_retrieval

from .trainer import Trainer

logger = logging.getLogger(__name__)

ABLATION_METRICS = ("mrr@10", "recall@1")


def batch_size_ablation(
    config: TrainConfig,
    data: Sequence[PairExample],
    batch_sizes: Sequence[int],
    held_out: RetrievalSet,
    total_pairs: int | None = None,
    index_config: IndexConfig | None = None,
    progress: bool = False,
) -> pd.DataFrame:
    """
    Compare batch sizes at an equal budget of training pairs.

    Args:
        config: Base training configuration; batch_size and total_steps are
            replaced per run
        data: Training pairs (at least max(batch_sizes) of them)
        batch_sizes: Two or more distinct batch sizes
        held_out: Retrieval set used to score every run
        total_pairs: Pairs seen per run; defaults to config.total_steps * config.batch_size
        index_config: Index used for held-out search (flat by default)

    Returns:
        DataFrame with columns batch_size, steps, pairs_seen, mrr@10, recall@1

    Raises:
        TrainingError: On fewer than 2 batch sizes or a budget smaller than the largest batch
    """
    sizes = list(dict.fromkeys(batch_sizes))
    if len(sizes) < 2:
        raise TrainingError(f"batch-size ablation needs at least 2 distinct batch sizes, got {list(batch_sizes)}")
    total_pairs = total_pairs if total_pairs is not None else config.total_steps * config.batch_size
    if total_pairs < max(sizes):
        raise TrainingError(f"total_pairs={total_pairs} is smaller than the largest batch size {max(sizes)}")

    eval_config = EvalConfig(ks=[1, 10])
    rows = []
    for m in sizes:
        steps = total_pairs // m
        run_config = config.model_copy(update={"batch_size": m, "total_steps": steps})
        logger.info(f"Ablation run: batch size {m}, {steps} steps ({steps * m} pairs)")
        trainer = Trainer(run_config)
        trainer.fit(data, progress=progress)
        metrics = evaluate_retrieval(trainer.model(), held_out, index_config, eval_config)
        rows.append(
            {
                "batch_size": m,
                "steps": steps,
                "pairs_seen": steps * m,
                **{name: metrics[name] for name in ABLATION_METRICS},
            }
        )
    return pd.DataFrame(rows, columns=["batch_size", "steps", "pairs_seen", *ABLATION_METRICS])
