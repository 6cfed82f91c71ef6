"""
Shared fixtures for evaluation tests.

LookupModel stands in for an EmbeddingModel with hand-picked vectors so that
expected metric values can be worked out by hand.
"""

from collections.abc import Sequence

import numpy as np
import pytest

from embedlab.core.tokenizer import Side


class LookupModel:
    """Embeds each known text to a fixed vector, regardless of side."""

    source = None

    def __init__(self, table: dict[str, np.ndarray]) -> None:
        self.table = {k: np.asarray(v, dtype=np.float64) / np.linalg.norm(v) for k, v in table.items()}
        self.calls: list[Side] = []

    def embed_texts(self, texts: Sequence[str | bytes], side: Side, batch_size: int = 64, progress: bool = False) -> np.ndarray:
        self.calls.append(Side(side))
        keys = [t.decode() if isinstance(t, bytes) else t for t in texts]
        return np.stack([self.table[k] for k in keys])


@pytest.fixture
def basis() -> np.ndarray:
    return np.eye(4)


@pytest.fixture
def lookup_model(basis: np.ndarray) -> LookupModel:
    """Queries q1..q3 point at documents d1..d3; q3 sits between d3 and d4."""
    return LookupModel(
        {
            "doc one": basis[0],
            "doc two": basis[1],
            "doc three": basis[2],
            "doc four": basis[3],
            "query one": basis[0],
            "query two": basis[0] * 0.2 + basis[1],
            "query three": basis[3] * 0.9 + basis[2] * 0.5,
        }
    )
