"""
Evaluation protocols for embedlab.

This module contains:
- Ranked retrieval metrics (MRR@k, Recall@k, nDCG@k)
- Linear probe, k-NN and zero-shot classification
- Sentence-similarity rank correlation
- Retrieval and code-search runners
- Multi-checkpoint tracking
"""

from .classify import (
    LabeledEmbedding,
    embed_labeled,
    knn_accuracy,
    knn_classify,
    knn_classify_many,
    label_texts,
    linear_probe,
    validate_template,
    zero_shot_accuracy,
    zero_shot_classify,
    zero_shot_predict,
)
from .metrics import mrr_at_k, ndcg_at_k, recall_at_k, retrieval_metrics
from .retrieval import check_qrels, code_search_eval, evaluate_retrieval
from .similarity import score_correlation, sentence_similarity_eval, spearman
from .tracking import TRACKING_COLUMNS, EvalSuite, ProbeSuite, RetrievalSuite, STSSuite, track_checkpoints

__all__ = [
    # Retrieval metrics
    "mrr_at_k",
    "ndcg_at_k",
    "recall_at_k",
    "retrieval_metrics",
    # Classification
    "LabeledEmbedding",
    "embed_labeled",
    "knn_accuracy",
    "knn_classify",
    "knn_classify_many",
    "label_texts",
    "linear_probe",
    "validate_template",
    "zero_shot_accuracy",
    "zero_shot_classify",
    "zero_shot_predict",
    # Sentence similarity
    "score_correlation",
    "sentence_similarity_eval",
    "spearman",
    # Runners
    "check_qrels",
    "code_search_eval",
    "evaluate_retrieval",
    # Tracking
    "TRACKING_COLUMNS",
    "EvalSuite",
    "ProbeSuite",
    "RetrievalSuite",
    "STSSuite",
    "track_checkpoints",
]
