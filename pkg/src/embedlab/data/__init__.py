"""
Dataset ingestion for embedlab.

This module contains:
- Validated JSONL/TSV readers for pairs, corpora, queries, labels and qrels
- A synthetic noisy-copy pair generator
- The (docstring, code) pair miner for Python and JavaScript sources
"""

from .miner import LANGUAGES, MinedPair, MiningStats, clean_doc_comment, mine_code_pairs, mine_javascript, mine_python
from .records import (
    LabeledTextRecord,
    LabelRecord,
    PairExample,
    PairRecord,
    QRels,
    RetrievalSet,
    SimilarityRecord,
    TextRecord,
    load_labeled_texts,
    load_labels,
    load_pairs,
    load_qrels,
    load_retrieval_set,
    load_similarity_pairs,
    load_texts,
    read_jsonl,
)
from .synthetic import generate_noisy_pairs, pairs_to_retrieval_set

__all__ = [
    # Records
    "LabelRecord",
    "LabeledTextRecord",
    "PairExample",
    "PairRecord",
    "QRels",
    "RetrievalSet",
    "SimilarityRecord",
    "TextRecord",
    "load_labeled_texts",
    "load_labels",
    "load_pairs",
    "load_qrels",
    "load_retrieval_set",
    "load_similarity_pairs",
    "load_texts",
    "read_jsonl",
    # Synthetic data
    "generate_noisy_pairs",
    "pairs_to_retrieval_set",
    # Code pair mining
    "LANGUAGES",
    "MinedPair",
    "MiningStats",
    "clean_doc_comment",
    "mine_code_pairs",
    "mine_javascript",
    "mine_python",
]
