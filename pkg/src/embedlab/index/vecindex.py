"""
Cosine-similarity vector index with exact and approximate search.

Vectors are stored unit-normalized, so ranking by dot product is ranking by
cosine. Results are ordered by descending score with ties broken by
ascending id.

Two modes:
- flat: exhaustive search over the stored matrix (exact).
- graph: a hierarchical navigable small-world graph. Each vector is assigned
  a random top layer; insertion descends greedily through the upper layers
  and links the new node to its closest candidates on every layer it lives
  on (degree neighbors, 2 * degree on layer 0). Search descends the same way
  and runs a beam search on layer 0; candidates are re-scored exactly, so
  only candidate selection is approximate.

The index is immutable after build(); searches never modify it.
"""

import heapq
import logging
import math
from collections import Counter
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from tqdm import tqdm

from embedlab.config.defaults import DEFAULT_GRAPH_BEAM, DEFAULT_GRAPH_DEGREE, DEFAULT_SEED
from embedlab.core.container import decode_container, encode_container, read_container, write_container
from embedlab.errors import FormatError, VectorIndexError

logger = logging.getLogger(__name__)

INDEX_MAGIC = b"CPTI"
INDEX_VERSION = 1
UNIT_NORM_TOL = 1e-6


class IndexMode(str, Enum):
    FLAT = "flat"
    GRAPH = "graph"


@dataclass(frozen=True)
class SearchHit:
    id: str
    score: float


@dataclass(frozen=True)
class RetrievalResult:
    """Ranked hits: descending score, ties by ascending id."""

    hits: tuple[SearchHit, ...]

    def __len__(self) -> int:
        return len(self.hits)

    def __iter__(self) -> Iterator[SearchHit]:
        return iter(self.hits)

    def __getitem__(self, i: int) -> SearchHit:
        return self.hits[i]

    @property
    def ids(self) -> list[str]:
        return [h.id for h in self.hits]

    @property
    def scores(self) -> list[float]:
        return [h.score for h in self.hits]


def _as_matrix(vectors: "np.ndarray | Sequence[np.ndarray]") -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        matrix = vectors
    else:
        dims = {np.shape(v) for v in vectors}
        if len(dims) > 1:
            raise VectorIndexError(f"dimension mismatch among vectors: {sorted(dims)}")
        matrix = np.asarray(vectors)
    if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise VectorIndexError(f"expected a non-empty (n, d) matrix, got shape {matrix.shape}")
    return np.array(matrix, dtype=np.float64)


def _check_unit_norm(matrix: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(matrix)):
        raise VectorIndexError(f"{what} contain non-finite values")
    norms = np.linalg.norm(matrix, axis=-1)
    off = np.abs(norms - 1.0) > UNIT_NORM_TOL
    if np.any(off):
        worst = float(norms[np.argmax(np.abs(norms - 1.0))])
        raise VectorIndexError(f"{what} must be unit-norm (found norm {worst:.8f})")


class _Graph:
    """Layered adjacency lists: neighbors[node][layer] -> node ids."""

    def __init__(self, vectors: np.ndarray, degree: int, beam: int) -> None:
        self.vectors = vectors
        self.degree = degree
        self.beam = beam
        self.levels: list[int] = []
        self.neighbors: list[list[list[int]]] = []
        self.entry_point = 0

    @property
    def max_level(self) -> int:
        return self.levels[self.entry_point]

    def capacity(self, layer: int) -> int:
        return 2 * self.degree if layer == 0 else self.degree

    def search_layer(self, query: np.ndarray, entry_points: list[int], ef: int, layer: int) -> list[tuple[float, int]]:
        """Beam search on one layer; returns up to ef (similarity, node) pairs, best first."""
        entry_sims = self.vectors[entry_points] @ query
        visited = set(entry_points)
        candidates = [(-float(s), n) for s, n in zip(entry_sims, entry_points, strict=True)]
        heapq.heapify(candidates)
        results = [(float(s), n) for s, n in zip(entry_sims, entry_points, strict=True)]
        heapq.heapify(results)
        while len(results) > ef:
            heapq.heappop(results)

        while candidates:
            neg_sim, node = heapq.heappop(candidates)
            if len(results) >= ef and -neg_sim < results[0][0]:
                break
            fresh = [n for n in self.neighbors[node][layer] if n not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            sims = self.vectors[fresh] @ query
            for n, s in zip(fresh, sims, strict=True):
                s = float(s)
                if len(results) < ef or s > results[0][0]:
                    heapq.heappush(candidates, (-s, n))
                    heapq.heappush(results, (s, n))
                    if len(results) > ef:
                        heapq.heappop(results)
        return sorted(results, key=lambda r: (-r[0], r[1]))

    def descend(self, query: np.ndarray, down_to: int) -> int:
        """Greedy walk from the entry point through layers above down_to."""
        node = self.entry_point
        for layer in range(self.max_level, down_to, -1):
            node = self.search_layer(query, [node], 1, layer)[0][1]
        return node

    def _prune(self, node: int, layer: int) -> None:
        links = self.neighbors[node][layer]
        if len(links) <= self.capacity(layer):
            return
        sims = self.vectors[links] @ self.vectors[node]
        keep = np.argsort(-sims, kind="stable")[: self.capacity(layer)]
        self.neighbors[node][layer] = [links[i] for i in keep]

    def insert(self, node: int, level: int) -> None:
        self.levels.append(level)
        self.neighbors.append([[] for _ in range(level + 1)])
        if node == 0:
            return
        query = self.vectors[node]
        entry = self.descend(query, level)
        for layer in range(min(level, self.max_level), -1, -1):
            candidates = self.search_layer(query, [entry], self.beam, layer)
            chosen = [n for _, n in candidates[: self.degree]]
            self.neighbors[node][layer] = chosen
            for other in chosen:
                self.neighbors[other][layer].append(node)
                self._prune(other, layer)
            entry = candidates[0][1]
        if level > self.max_level:
            self.entry_point = node


class VectorIndex:
    """
    Immutable k-nearest-neighbor index over unit vectors.

    Example:
        >>> index = VectorIndex.build(ids, vectors, mode=IndexMode.GRAPH, seed=0)
        >>> index.search(query, k=10).ids[:3]
        ['doc-17', 'doc-3', 'doc-88']
    """

    def __init__(
        self,
        ids: list[str],
        vectors: np.ndarray,
        mode: IndexMode,
        degree: int,
        beam: int,
        seed: int,
        graph: _Graph | None = None,
        source: str | None = None,
    ) -> None:
        self._ids = list(ids)
        self._vectors = vectors
        self._vectors.setflags(write=False)
        self.mode = IndexMode(mode)
        self.degree = degree
        self.beam = beam
        self.seed = seed
        self.source = source
        self._graph = graph
        # rank of each id in ascending id order, for tie breaking
        self._id_rank = np.argsort(np.argsort(np.array(self._ids), kind="stable"), kind="stable")

    @classmethod
    def build(
        cls,
        ids: Sequence[str],
        vectors: "np.ndarray | Sequence[np.ndarray]",
        mode: IndexMode | str = IndexMode.FLAT,
        degree: int = DEFAULT_GRAPH_DEGREE,
        beam: int = DEFAULT_GRAPH_BEAM,
        seed: int = DEFAULT_SEED,
        source: str | None = None,
        progress: bool = False,
    ) -> "VectorIndex":
        """
        Build an index.

        Args:
            ids: Unique string ids, one per vector
            vectors: (n, d) unit-norm rows
            mode: "flat" or "graph"
            degree: Graph neighbors per node (layer 0 keeps up to 2 * degree)
            beam: Candidate beam width during graph construction and search
            seed: Seed for graph layer assignment
            source: Optional checkpoint path recorded in the saved index

        Raises:
            VectorIndexError: On duplicate ids, dimension mismatch or non-unit vectors
        """
        mode = IndexMode(mode)
        matrix = _as_matrix(vectors)
        ids = [str(i) for i in ids]
        if len(ids) != matrix.shape[0]:
            raise VectorIndexError(f"{len(ids)} ids for {matrix.shape[0]} vectors")
        duplicates = sorted(i for i, n in Counter(ids).items() if n > 1)
        if duplicates:
            raise VectorIndexError(f"duplicate ids {duplicates[:5]}")
        _check_unit_norm(matrix, "indexed vectors")
        if degree < 2 or beam < 1:
            raise VectorIndexError(f"invalid graph parameters degree={degree}, beam={beam}")

        graph = None
        if mode is IndexMode.GRAPH:
            graph = _Graph(matrix, degree, beam)
            rng = np.random.Generator(np.random.PCG64(seed))
            levels = np.floor(-np.log1p(-rng.random(matrix.shape[0])) / math.log(degree)).astype(int)
            nodes = range(matrix.shape[0])
            if progress:
                nodes = tqdm(nodes, desc="build graph", unit="vec")
            for node in nodes:
                graph.insert(node, int(levels[node]))
        logger.info(f"Built {mode.value} index over {matrix.shape[0]} vectors of dim {matrix.shape[1]}")
        return cls(ids, matrix, mode, degree, beam, seed, graph=graph, source=source)

    @property
    def dim(self) -> int:
        return int(self._vectors.shape[1])

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors

    def __len__(self) -> int:
        return len(self._ids)

    def adjacency(self) -> list[list[list[int]]] | None:
        """Copy of the graph links per node and layer (None in flat mode)."""
        if self._graph is None:
            return None
        return [[list(layer) for layer in node] for node in self._graph.neighbors]

    def _rank(self, candidates: np.ndarray, scores: np.ndarray, k: int) -> RetrievalResult:
        order = np.lexsort((self._id_rank[candidates], -scores))[:k]
        return RetrievalResult(
            tuple(SearchHit(self._ids[candidates[i]], float(scores[i])) for i in order)
        )

    def _check_query(self, query: np.ndarray, k: int) -> np.ndarray:
        if k < 1:
            raise VectorIndexError(f"k must be >= 1, got {k}")
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise VectorIndexError(f"query has shape {query.shape}, index dim is {self.dim}")
        _check_unit_norm(query, "query vectors")
        return query

    def search(self, query: np.ndarray, k: int) -> RetrievalResult:
        """
        Top-k neighbors of a unit-norm query; k larger than the index returns everything.

        Reported scores are exact dot products in both modes.
        """
        query = self._check_query(query, k)
        if self.mode is IndexMode.FLAT or self._graph is None or k >= len(self):
            candidates = np.arange(len(self))
        else:
            entry = self._graph.descend(query, 0)
            found = self._graph.search_layer(query, [entry], max(self.beam, k), 0)
            candidates = np.array(sorted(n for _, n in found))
        return self._rank(candidates, self._vectors[candidates] @ query, k)

    def search_many(self, queries: np.ndarray, k: int) -> list[RetrievalResult]:
        return [self.search(q, k) for q in np.asarray(queries, dtype=np.float64)]

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------

    def _metadata(self) -> dict[str, Any]:
        metadata: dict[str, Any] = {
            "kind": "index",
            "mode": self.mode.value,
            "dim": self.dim,
            "ids": self._ids,
            "degree": self.degree,
            "beam": self.beam,
            "seed": self.seed,
            "source_checkpoint": self.source,
        }
        if self._graph is not None:
            metadata["graph"] = {
                "entry_point": self._graph.entry_point,
                "levels": self._graph.levels,
                "neighbors": self._graph.neighbors,
            }
        return metadata

    def to_bytes(self) -> bytes:
        return encode_container(INDEX_MAGIC, INDEX_VERSION, self._metadata(), [("vectors", self._vectors, "<f8")])

    @classmethod
    def _from_parts(cls, metadata: dict[str, Any], arrays: dict[str, np.ndarray], source: str) -> "VectorIndex":
        try:
            mode = IndexMode(metadata["mode"])
            ids = [str(i) for i in metadata["ids"]]
            vectors = arrays["vectors"]
            degree, beam, seed = int(metadata["degree"]), int(metadata["beam"]), int(metadata["seed"])
            if vectors.shape != (len(ids), int(metadata["dim"])):
                raise ValueError(f"vectors shape {vectors.shape} does not match {len(ids)} ids")
            graph = None
            if mode is IndexMode.GRAPH:
                stored = metadata["graph"]
                graph = _Graph(vectors, degree, beam)
                graph.levels = [int(x) for x in stored["levels"]]
                graph.neighbors = [[[int(n) for n in layer] for layer in node] for node in stored["neighbors"]]
                graph.entry_point = int(stored["entry_point"])
                if len(graph.levels) != len(ids) or len(graph.neighbors) != len(ids):
                    raise ValueError("graph size does not match ids")
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{source}: invalid index metadata: {e}") from e
        return cls(ids, vectors, mode, degree, beam, seed, graph=graph, source=metadata.get("source_checkpoint"))

    @classmethod
    def from_bytes(cls, payload: bytes, source: str = "<bytes>") -> "VectorIndex":
        metadata, arrays = decode_container(payload, INDEX_MAGIC, INDEX_VERSION, source)
        return cls._from_parts(metadata, arrays, source)

    def save(self, path: Path) -> Path:
        """Atomically write the index as a CPTI container."""
        write_container(Path(path), INDEX_MAGIC, INDEX_VERSION, self._metadata(), [("vectors", self._vectors, "<f8")])
        logger.info(f"Saved {self.mode.value} index ({len(self)} vectors) to {path}")
        return Path(path)

    @classmethod
    def load(cls, path: Path) -> "VectorIndex":
        """
        Read a saved index.

        Raises:
            FormatError: On corrupt, truncated or version-mismatched files
        """
        metadata, arrays = read_container(Path(path), INDEX_MAGIC, INDEX_VERSION)
        index = cls._from_parts(metadata, arrays, str(path))
        logger.info(f"Loaded {index.mode.value} index ({len(index)} vectors) from {path}")
        return index
