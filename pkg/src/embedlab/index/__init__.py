"""
Vector index for nearest-neighbor retrieval under cosine similarity.

This module contains:
- Exact (flat) search over a stored matrix
- Approximate search over a hierarchical navigable small-world graph
- CPTI container persistence
"""

from .vecindex import (
    INDEX_MAGIC,
    INDEX_VERSION,
    UNIT_NORM_TOL,
    IndexMode,
    RetrievalResult,
    SearchHit,
    VectorIndex,
)

__all__ = [
    "INDEX_MAGIC",
    "INDEX_VERSION",
    "UNIT_NORM_TOL",
    "IndexMode",
    "RetrievalResult",
    "SearchHit",
    "VectorIndex",
]
