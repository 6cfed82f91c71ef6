"""
Sentence-similarity evaluation: Spearman correlation between model cosine
scores and gold similarity scores.
"""

import logging
from collections.abc import Sequence

import numpy as np
import pandas as pd

from embedlab.core.encoder import EmbeddingModel
from embedlab.core.tokenizer import Side
from embedlab.errors import EvaluationError

logger = logging.getLogger(__name__)

MIN_PAIRS = 3


def spearman(predicted: Sequence[float], gold: Sequence[float]) -> float:
    """
    Spearman rank correlation with average ranks for ties.

    Computed as the Pearson correlation of the two rank vectors.
    """
    predicted_ranks = pd.Series(predicted, dtype=float).rank(method="average")
    gold_ranks = pd.Series(gold, dtype=float).rank(method="average")
    return float(predicted_ranks.corr(gold_ranks))


def score_correlation(predicted: Sequence[float], gold: Sequence[float]) -> float:
    """
    Spearman correlation with the protocol's preconditions enforced.

    Raises:
        EvaluationError: On fewer than 3 pairs, length mismatch or constant gold scores
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if predicted.shape != gold.shape:
        raise EvaluationError(f"{len(predicted)} predictions for {len(gold)} gold scores")
    if len(gold) < MIN_PAIRS:
        raise EvaluationError(f"need at least {MIN_PAIRS} scored pairs, got {len(gold)}")
    if np.all(gold == gold[0]):
        raise EvaluationError("gold scores are all equal; rank correlation is undefined")
    if np.all(predicted == predicted[0]):
        logger.warning("Model scores are constant; reporting correlation 0.0")
        return 0.0
    return spearman(predicted, gold)


def sentence_similarity_eval(pairs: Sequence[tuple[str, str, float]], model: EmbeddingModel) -> float:
    """
    Spearman correlation between cosine(embed(a), embed(b)) and gold scores.

    Both sentences are embedded on the x side.

    Args:
        pairs: (sentence a, sentence b, gold score) triples
        model: Frozen embedding model

    Returns:
        Correlation in [-1, 1]
    """
    if len(pairs) < MIN_PAIRS:
        raise EvaluationError(f"need at least {MIN_PAIRS} scored pairs, got {len(pairs)}")
    a = model.embed_texts([p[0] for p in pairs], Side.X)
    b = model.embed_texts([p[1] for p in pairs], Side.X)
    cosines = np.sum(a * b, axis=1)
    rho = score_correlation(cosines, [p[2] for p in pairs])
    logger.info(f"Sentence similarity over {len(pairs)} pairs: spearman {rho:.4f}")
    return rho
