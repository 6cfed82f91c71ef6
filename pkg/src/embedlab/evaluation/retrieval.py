"""
End-to-end retrieval runners.

evaluate_retrieval embeds a corpus (y side) and its queries (x side), builds
a vector index and scores the rankings against the qrels. code_search_eval
does the same for (docstring, code) pairs, searching each docstring only
within its own candidate pool.
"""

import logging
from collections.abc import Sequence

import numpy as np

from embedlab.config.schema import EvalConfig, IndexConfig
from embedlab.core.encoder import EmbeddingModel
from embedlab.core.tokenizer import Side
from embedlab.data.records import RetrievalSet
from embedlab.errors import EvaluationError
from embedlab.index.vecindex import IndexMode, VectorIndex

from .metrics import mrr_at_k, retrieval_metrics

logger = logging.getLogger(__name__)


def check_qrels(dataset: RetrievalSet) -> None:
    """Every judged document must exist in the corpus."""
    missing = sorted({doc for docs in dataset.qrels.values() for doc in docs} - set(dataset.corpus))
    if missing:
        raise EvaluationError(f"{len(missing)} judged documents are not in the corpus, e.g. {missing[:5]}")


def evaluate_retrieval(
    model: EmbeddingModel,
    dataset: RetrievalSet,
    index_config: IndexConfig | None = None,
    eval_config: EvalConfig | None = None,
    progress: bool = False,
) -> dict[str, float]:
    """
    Retrieval metrics for a model on one benchmark.

    Returns:
        {"mrr@k", "recall@k", "ndcg@k"} for every cutoff in eval_config.ks

    Raises:
        EvaluationError: If judged documents are missing from the corpus or a
            query has no judgments
    """
    index_config = index_config or IndexConfig()
    eval_config = eval_config or EvalConfig()
    check_qrels(dataset)

    doc_ids = list(dataset.corpus)
    doc_vectors = model.embed_texts([dataset.corpus[d] for d in doc_ids], Side.Y, progress=progress)
    index = VectorIndex.build(
        doc_ids,
        doc_vectors,
        mode=index_config.mode,
        degree=index_config.degree,
        beam=index_config.beam,
        seed=index_config.seed,
        source=model.source,
    )

    query_ids = list(dataset.queries)
    query_vectors = model.embed_texts([dataset.queries[q] for q in query_ids], Side.X, progress=progress)
    k = max(eval_config.ks)
    results = {qid: index.search(vec, k) for qid, vec in zip(query_ids, query_vectors, strict=True)}
    metrics = retrieval_metrics(results, dataset.qrels, eval_config.ks, empty=eval_config.empty_qrels)
    summary = ", ".join(f"{name}={value:.4f}" for name, value in metrics.items())
    logger.info(f"Retrieval over {len(doc_ids)} docs / {len(query_ids)} queries: {summary}")
    return metrics


def _pools(n: int, pool_size: int, seed: int) -> list[np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    pools = [order[i : i + pool_size] for i in range(0, n, pool_size)]
    # a one-item pool ranks its only document first
    if len(pools) > 1 and len(pools[-1]) < 2:
        pools[-2] = np.concatenate([pools[-2], pools.pop()])
    return pools


def code_search_eval(
    model: EmbeddingModel,
    pairs: Sequence[tuple[str | bytes, str | bytes]],
    pool_size: int = 1000,
    seed: int = 0,
) -> float:
    """
    MRR of finding each function's code from its docstring.

    Pairs are shuffled with the seed and cut into pools of pool_size
    candidates (the last pool may be smaller); each docstring is ranked
    against the code of its own pool only.

    Args:
        pairs: (docstring, code) tuples
        pool_size: Candidates per pool (1000, or 10000 for the harder setting)
        seed: Shuffle seed

    Returns:
        MRR over all docstrings, cutoff = pool size
    """
    if len(pairs) < 2:
        raise EvaluationError(f"code search needs at least 2 pairs, got {len(pairs)}")
    if pool_size < 2:
        raise EvaluationError(f"pool_size must be >= 2, got {pool_size}")

    reciprocal_ranks: list[float] = []
    for pool in _pools(len(pairs), pool_size, seed):
        ids = [f"{i:09d}" for i in pool]
        docs = model.embed_texts([pairs[i][1] for i in pool], Side.Y)
        queries = model.embed_texts([pairs[i][0] for i in pool], Side.X)
        index = VectorIndex.build(ids, docs, mode=IndexMode.FLAT)
        results = {qid: index.search(vec, len(pool)) for qid, vec in zip(ids, queries, strict=True)}
        qrels = {qid: {qid} for qid in ids}
        reciprocal_ranks.append(mrr_at_k(results, qrels, len(pool)) * len(pool))
    mrr = float(sum(reciprocal_ranks) / len(pairs))
    logger.info(f"Code search over {len(pairs)} pairs (pool size {pool_size}): MRR {mrr:.4f}")
    return mrr
