"""
Evaluate a series of checkpoints from one training run.

Each suite maps a frozen model to a dict of named metrics; the result is a
long table with one row per (checkpoint, suite, metric), ordered by training step.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import pandas as pd

from embedlab.config.schema import EvalConfig, IndexConfig
from embedlab.core.encoder import EmbeddingModel
from embedlab.data.records import RetrievalSet
from embedlab.errors import EvaluationError

from .classify import embed_labeled, linear_probe
from .retrieval import evaluate_retrieval
from .similarity import sentence_similarity_eval

logger = logging.getLogger(__name__)

TRACKING_COLUMNS = ["step", "suite", "checkpoint", "metric", "value"]


class EvalSuite(Protocol):
    name: str

    def evaluate(self, model: EmbeddingModel) -> dict[str, float]: ...


@dataclass
class RetrievalSuite:
    dataset: RetrievalSet
    index_config: IndexConfig = field(default_factory=IndexConfig)
    eval_config: EvalConfig = field(default_factory=EvalConfig)
    name: str = "retrieval"

    def evaluate(self, model: EmbeddingModel) -> dict[str, float]:
        return evaluate_retrieval(model, self.dataset, self.index_config, self.eval_config)


@dataclass
class STSSuite:
    pairs: Sequence[tuple[str, str, float]]
    name: str = "sts"

    def evaluate(self, model: EmbeddingModel) -> dict[str, float]:
        return {"spearman": sentence_similarity_eval(self.pairs, model)}


@dataclass
class ProbeSuite:
    train: Sequence[tuple[str, str]]
    test: Sequence[tuple[str, str]]
    eval_config: EvalConfig = field(default_factory=EvalConfig)
    name: str = "probe"

    def evaluate(self, model: EmbeddingModel) -> dict[str, float]:
        accuracy = linear_probe(
            embed_labeled(self.train, model),
            embed_labeled(self.test, model),
            l2=self.eval_config.probe_l2,
            steps=self.eval_config.probe_steps,
            lr=self.eval_config.probe_lr,
        )
        return {"accuracy": accuracy}


def track_checkpoints(paths: Sequence[Path], suites: Sequence[EvalSuite]) -> pd.DataFrame:
    """
    Run every suite on every checkpoint.

    Args:
        paths: At least two checkpoints with identical encoder configurations
        suites: Evaluation suites to run

    Returns:
        DataFrame with TRACKING_COLUMNS, one row per metric value, sorted by
        step (input order breaks ties, then suite order, then metric order)

    Raises:
        EvaluationError: On fewer than 2 checkpoints, no suites or mismatched configs
    """
    if len(paths) < 2:
        raise EvaluationError(f"tracking needs at least 2 checkpoints, got {len(paths)}")
    if not suites:
        raise EvaluationError("tracking needs at least one evaluation suite")

    models = [EmbeddingModel.from_checkpoint(Path(p)) for p in paths]
    reference = models[0]
    for path, model in zip(paths, models, strict=True):
        if model.config != reference.config or model.vocab != reference.vocab:
            raise EvaluationError(f"{path}: encoder configuration differs from {paths[0]}")

    rows: list[dict[str, object]] = []
    for path, model in sorted(zip(paths, models, strict=True), key=lambda pm: pm[1].step):
        for suite in suites:
            logger.info(f"Evaluating {suite.name} at step {model.step} ({path})")
            for metric, value in suite.evaluate(model).items():
                rows.append(
                    {"step": model.step, "suite": suite.name, "checkpoint": str(path), "metric": metric, "value": value}
                )
    return pd.DataFrame(rows, columns=TRACKING_COLUMNS)
