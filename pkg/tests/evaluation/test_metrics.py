"""
Tests for ranked-retrieval metrics.
"""

import logging
import math

import numpy as np
import pytest

from embedlab.errors import EvaluationError
from embedlab.evaluation import mrr_at_k, ndcg_at_k, recall_at_k, retrieval_metrics
from embedlab.index import RetrievalResult, SearchHit


class TestMRR:
    """Tests for mean reciprocal rank."""

    def test_ranks_one_and_two(self):
        """Test relevant documents at ranks 1 and 2 give 0.75."""
        results = {"q1": ["a", "b"], "q2": ["c", "d"]}
        assert mrr_at_k(results, {"q1": {"a"}, "q2": {"d"}}, k=10) == pytest.approx(0.75)

    def test_first_relevant_counts(self):
        """Test only the first relevant document matters."""
        assert mrr_at_k({"q": ["x", "a", "b"]}, {"q": {"a", "b"}}, k=3) == pytest.approx(0.5)

    def test_cutoff(self):
        """Test a relevant document below k scores zero."""
        assert mrr_at_k({"q": ["x", "y", "a"]}, {"q": {"a"}}, k=2) == 0.0

    def test_retrieval_result_input(self):
        """Test RetrievalResult rankings are accepted."""
        ranking = RetrievalResult((SearchHit("b", 0.9), SearchHit("a", 0.5)))
        assert mrr_at_k({"q": ranking}, {"q": {"a"}}, k=10) == pytest.approx(0.5)


class TestRecall:
    """Tests for recall@k."""

    def test_fraction_found(self):
        """Test one of two relevant documents found."""
        assert recall_at_k({"q": ["a", "x", "b"]}, {"q": {"a", "b"}}, k=2) == pytest.approx(0.5)

    def test_all_found(self):
        """Test every relevant document inside the cutoff."""
        assert recall_at_k({"q": ["b", "a"]}, {"q": {"a", "b"}}, k=2) == 1.0


class TestNDCG:
    """Tests for binary-gain nDCG."""

    def test_relevant_at_rank_two(self):
        """Test a single relevant document at rank 2 gives 1/log2(3)."""
        assert ndcg_at_k({"q": ["x", "a"]}, {"q": {"a"}}, k=10) == pytest.approx(1 / math.log2(3))

    def test_ideal_limited_by_k(self):
        """Test the ideal ranking only fills k slots."""
        assert ndcg_at_k({"q": ["a", "b", "x"]}, {"q": {"a", "b", "c"}}, k=2) == pytest.approx(1.0)

    def test_short_ranking(self):
        """Test a ranking shorter than k is still compared with a k-slot ideal."""
        expected = 1.0 / (1.0 + 1.0 / math.log2(3))
        assert ndcg_at_k({"q": ["a"]}, {"q": {"a", "b"}}, k=10) == pytest.approx(expected)

    def test_no_relevant_retrieved(self):
        """Test zero when nothing relevant is in the top k."""
        assert ndcg_at_k({"q": ["x", "y"]}, {"q": {"a"}}, k=2) == 0.0


class TestAggregation:
    """Tests for averaging and empty relevant sets."""

    def test_empty_relevant_skipped(self, caplog):
        """Test queries without relevant documents are skipped with a warning."""
        results = {"q1": ["a"], "q2": ["b"]}
        qrels = {"q1": {"a"}, "q2": set()}
        with caplog.at_level(logging.WARNING):
            assert mrr_at_k(results, qrels, k=1) == 1.0
        assert "skipped 1" in caplog.text

    def test_empty_relevant_zero(self):
        """Test the zero policy counts such queries as 0."""
        results = {"q1": ["a"], "q2": ["b"]}
        qrels = {"q1": {"a"}, "q2": set()}
        assert mrr_at_k(results, qrels, k=1, empty="zero") == pytest.approx(0.5)

    def test_all_empty(self):
        """Test an error when no query can be scored."""
        with pytest.raises(EvaluationError, match="empty relevant set"):
            recall_at_k({"q": ["a"]}, {"q": set()}, k=1)

    def test_unjudged_query(self):
        """Test a query missing from the qrels."""
        with pytest.raises(EvaluationError, match="no relevance judgments"):
            mrr_at_k({"q": ["a"]}, {}, k=1)

    def test_invalid_k(self):
        """Test k must be positive."""
        with pytest.raises(EvaluationError, match="k must be"):
            ndcg_at_k({"q": ["a"]}, {"q": {"a"}}, k=0)

    def test_no_queries(self):
        """Test an empty result set."""
        with pytest.raises(EvaluationError, match="no queries"):
            mrr_at_k({}, {"q": {"a"}}, k=1)

    def test_bounded(self):
        """Test metrics stay within [0, 1]."""
        results = {"q1": ["a", "b", "c"], "q2": ["c", "b", "a"], "q3": ["x"]}
        qrels = {"q1": {"b", "c"}, "q2": {"a"}, "q3": {"a"}}
        for value in retrieval_metrics(results, qrels, ks=[1, 2, 3]).values():
            assert 0.0 <= value <= 1.0

    def test_metric_keys(self):
        """Test one entry per metric and cutoff, cutoffs deduplicated."""
        metrics = retrieval_metrics({"q": ["a"]}, {"q": {"a"}}, ks=[10, 1, 10])
        assert set(metrics) == {"mrr@1", "recall@1", "ndcg@1", "mrr@10", "recall@10", "ndcg@10"}


def _oracle(ranking: list[str], relevant: set[str], k: int) -> tuple[float, float, float]:
    """(reciprocal rank, recall, ndcg) from gain vectors padded to k slots."""
    gains = np.zeros(k)
    for i, doc in enumerate(ranking[:k]):
        gains[i] = 1.0 if doc in relevant else 0.0
    discounts = 1.0 / np.log2(np.arange(2, k + 2))
    hits = np.flatnonzero(gains)
    rr = 1.0 / (hits[0] + 1) if hits.size else 0.0
    ideal = np.zeros(k)
    ideal[: min(k, len(relevant))] = 1.0
    return rr, gains.sum() / len(relevant), float(gains @ discounts / (ideal @ discounts))


def _random_instance(rng: np.random.Generator) -> tuple[dict[str, list[str]], dict[str, set[str]], int]:
    docs = [f"d{i}" for i in range(12)]
    results, qrels = {}, {}
    for q in range(int(rng.integers(1, 5))):
        # rankings may be shorter than k
        length = int(rng.integers(1, len(docs) + 1))
        results[f"q{q}"] = [str(d) for d in rng.permutation(docs)[:length]]
        qrels[f"q{q}"] = {str(d) for d in rng.choice(docs, size=int(rng.integers(1, 5)), replace=False)}
    return results, qrels, int(rng.integers(1, 15))


class TestBruteForceAgreement:
    """Tests comparing the metrics with a direct computation on random rankings."""

    def test_random_instances(self):
        """Test 1,000 seeded instances match the gain-vector computation exactly."""
        rng = np.random.default_rng(20)
        for _ in range(1000):
            results, qrels, k = _random_instance(rng)
            per_query = np.array([_oracle(results[q], qrels[q], k) for q in sorted(results)])
            rr, recall, ndcg = per_query.mean(axis=0)
            assert mrr_at_k(results, qrels, k) == pytest.approx(rr, abs=1e-12)
            assert recall_at_k(results, qrels, k) == pytest.approx(recall, abs=1e-12)
            assert ndcg_at_k(results, qrels, k) == pytest.approx(ndcg, abs=1e-12)

    def test_monotone_in_k(self):
        """Test MRR@k and Recall@k never decrease as k grows."""
        rng = np.random.default_rng(21)
        for _ in range(200):
            results, qrels, _ = _random_instance(rng)
            mrr = [mrr_at_k(results, qrels, k) for k in range(1, 14)]
            recall = [recall_at_k(results, qrels, k) for k in range(1, 14)]
            assert all(a <= b + 1e-15 for a, b in zip(mrr, mrr[1:], strict=False))
            assert all(a <= b + 1e-15 for a, b in zip(recall, recall[1:], strict=False))
