"""
Ranked-retrieval metrics with binary relevance.

Each metric takes per-query rankings (a RetrievalResult or a plain list of
doc ids), the qrels, and a cutoff k, and returns the mean over queries.
Queries are aggregated in sorted id order so results do not depend on dict
ordering.

Queries whose relevant set is empty are skipped with a warning by default
(empty="skip"); with empty="zero" they count as 0.
"""

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from typing import Literal

import numpy as np

from embedlab.data.records import QRels
from embedlab.errors import EvaluationError
from embedlab.index.vecindex import RetrievalResult

logger = logging.getLogger(__name__)

EmptyPolicy = Literal["skip", "zero"]
Rankings = Mapping[str, RetrievalResult | Sequence[str]]


def _ids(ranking: RetrievalResult | Sequence[str]) -> list[str]:
    return ranking.ids if isinstance(ranking, RetrievalResult) else list(ranking)


def _mean_over_queries(
    name: str,
    results: Rankings,
    qrels: QRels,
    k: int,
    empty: EmptyPolicy,
    score: Callable[[list[str], set[str], int], float],
) -> float:
    if k < 1:
        raise EvaluationError(f"{name}: k must be >= 1, got {k}")
    if not results:
        raise EvaluationError(f"{name}: no queries to evaluate")
    if empty not in ("skip", "zero"):
        raise EvaluationError(f"{name}: unknown empty-qrels policy {empty!r}")

    values: list[float] = []
    skipped = 0
    for qid in sorted(results):
        if qid not in qrels:
            raise EvaluationError(f"{name}: query {qid!r} has no relevance judgments")
        relevant = qrels[qid]
        if not relevant:
            if empty == "skip":
                skipped += 1
                continue
            values.append(0.0)
            continue
        values.append(score(_ids(results[qid])[:k], relevant, k))

    if skipped:
        logger.warning(f"{name}: skipped {skipped} queries with no relevant documents")
    if not values:
        raise EvaluationError(f"{name}: every query has an empty relevant set")
    return float(np.mean(values))


def _reciprocal_rank(top: list[str], relevant: set[str], k: int) -> float:
    for rank, doc in enumerate(top, start=1):
        if doc in relevant:
            return 1.0 / rank
    return 0.0


def _recall(top: list[str], relevant: set[str], k: int) -> float:
    return len(relevant.intersection(top)) / len(relevant)


def _ndcg(top: list[str], relevant: set[str], k: int) -> float:
    # the ideal ranking fills k slots even when fewer documents were returned
    dcg = sum(1.0 / math.log2(i + 2) for i, doc in enumerate(top) if doc in relevant)
    ideal = sum(1.0 / math.log2(i + 2) for i in range(min(k, len(relevant))))
    if ideal == 0.0:
        return 0.0
    return dcg / ideal


def mrr_at_k(results: Rankings, qrels: QRels, k: int, empty: EmptyPolicy = "skip") -> float:
    """
    Mean reciprocal rank of the first relevant document within the top k.

    Example:
        >>> mrr_at_k({"q1": ["a", "b"], "q2": ["c", "d"]}, {"q1": {"a"}, "q2": {"d"}}, k=10)
        0.75
    """
    return _mean_over_queries("mrr", results, qrels, k, empty, _reciprocal_rank)


def recall_at_k(results: Rankings, qrels: QRels, k: int, empty: EmptyPolicy = "skip") -> float:
    """Mean fraction of each query's relevant documents found in the top k."""
    return _mean_over_queries("recall", results, qrels, k, empty, _recall)


def ndcg_at_k(results: Rankings, qrels: QRels, k: int, empty: EmptyPolicy = "skip") -> float:
    """
    Binary-gain nDCG@k with a log2(rank + 1) discount.

    The ideal DCG places min(k, |relevant|) relevant documents at the top.
    """
    return _mean_over_queries("ndcg", results, qrels, k, empty, _ndcg)


def retrieval_metrics(
    results: Rankings, qrels: QRels, ks: Sequence[int], empty: EmptyPolicy = "skip"
) -> dict[str, float]:
    """mrr@k, recall@k and ndcg@k for every cutoff, keyed like "mrr@10"."""
    metrics: dict[str, float] = {}
    for k in sorted(set(ks)):
        metrics[f"mrr@{k}"] = mrr_at_k(results, qrels, k, empty)
        metrics[f"recall@{k}"] = recall_at_k(results, qrels, k, empty)
        metrics[f"ndcg@{k}"] = ndcg_at_k(results, qrels, k, empty)
    return metrics
