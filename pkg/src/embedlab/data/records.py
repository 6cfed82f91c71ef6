"""
Readers for the JSONL and TSV dataset files.

Every JSONL line is validated against a Pydantic record model; the first bad
line aborts the load with a DataError naming the file and line number.

File layouts:
- training pairs:  {"x": str, "y": str, "negatives": [str]?, "id": str?}
- corpus/queries:  {"id": str, "text": str}
- classification:  {"text": str, "label": str}
- zero-shot labels:{"label": str, "description": str?}
- similarity:      {"a": str, "b": str, "score": float}
- qrels TSV:       query_id <TAB> doc_id <TAB> relevance, optional header row
"""

import json
import logging
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import TypeVar

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from embedlab.errors import DataError

logger = logging.getLogger(__name__)

QRels = dict[str, set[str]]

RecordT = TypeVar("RecordT", bound=BaseModel)


def _non_empty(value: str, what: str) -> str:
    if not value:
        raise ValueError(f"{what} cannot be empty")
    return value


class PairRecord(BaseModel):
    """One positive (x, y) pair with optional explicit negatives."""

    model_config = ConfigDict(extra="ignore")

    x: str
    y: str
    negatives: list[str] = Field(default_factory=list)
    id: str | None = None

    @field_validator("x", "y")
    @classmethod
    def validate_side(cls, v: str) -> str:
        return _non_empty(v, "pair side")

    @field_validator("negatives")
    @classmethod
    def validate_negatives(cls, v: list[str]) -> list[str]:
        for neg in v:
            _non_empty(neg, "hard negative")
        return v


class TextRecord(BaseModel):
    model_config = ConfigDict(extra="ignore")

    id: str
    text: str

    @field_validator("id", "text")
    @classmethod
    def validate_fields(cls, v: str) -> str:
        return _non_empty(v, "field")


class LabeledTextRecord(BaseModel):
    model_config = ConfigDict(extra="ignore")

    text: str
    label: str

    @field_validator("text", "label")
    @classmethod
    def validate_fields(cls, v: str) -> str:
        return _non_empty(v, "field")


class LabelRecord(BaseModel):
    """A zero-shot class; the label itself is used when no description is given."""

    model_config = ConfigDict(extra="ignore")

    label: str
    description: str | None = None

    @field_validator("label")
    @classmethod
    def validate_label(cls, v: str) -> str:
        return _non_empty(v, "label")

    @field_validator("description")
    @classmethod
    def validate_description(cls, v: str | None) -> str | None:
        return v if v is None else _non_empty(v, "description")

    @property
    def text(self) -> str:
        return self.description or self.label


class SimilarityRecord(BaseModel):
    model_config = ConfigDict(extra="ignore")

    a: str
    b: str
    score: float

    @field_validator("a", "b")
    @classmethod
    def validate_sentence(cls, v: str) -> str:
        return _non_empty(v, "sentence")


def _require_file(path: Path) -> Path:
    path = Path(path).expanduser()
    if not path.is_file():
        raise DataError(f"Data file not found: {path}")
    return path


def read_jsonl(path: Path, model: type[RecordT]) -> list[RecordT]:
    """
    Parse a JSONL file into validated records, skipping blank lines.

    Raises:
        DataError: If the file is missing or any line is malformed
    """
    path = _require_file(path)
    records: list[RecordT] = []
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(model.model_validate(json.loads(line)))
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: invalid JSON: {e.msg}") from e
            except ValidationError as e:
                first = e.errors()[0]
                where = ".".join(str(p) for p in first["loc"]) or "record"
                raise DataError(f"{path}:{lineno}: {where}: {first['msg']}") from e
    logger.info(f"Read {len(records)} {model.__name__} rows from {path}")
    return records


@dataclass(frozen=True)
class PairExample:
    """
    A positive training pair as raw bytes.

    Attributes:
        x: Query-side content
        y: Document-side content
        hard_negatives: Explicit non-matching documents for x (may be empty)
        pair_id: Stable identifier
    """

    x: bytes
    y: bytes
    hard_negatives: tuple[bytes, ...] = ()
    pair_id: str = ""

    def __post_init__(self) -> None:
        if not self.x or not self.y:
            raise DataError(f"pair {self.pair_id!r}: x and y must be non-empty")
        if any(not neg for neg in self.hard_negatives):
            raise DataError(f"pair {self.pair_id!r}: empty hard negative")

    @classmethod
    def from_text(cls, x: str, y: str, negatives: Iterable[str] = (), pair_id: str = "") -> "PairExample":
        return cls(
            x=x.encode("utf-8"),
            y=y.encode("utf-8"),
            hard_negatives=tuple(n.encode("utf-8") for n in negatives),
            pair_id=pair_id,
        )

    def to_record(self) -> dict[str, object]:
        record: dict[str, object] = {
            "id": self.pair_id,
            "x": self.x.decode("utf-8", errors="replace"),
            "y": self.y.decode("utf-8", errors="replace"),
        }
        if self.hard_negatives:
            record["negatives"] = [n.decode("utf-8", errors="replace") for n in self.hard_negatives]
        return record


def _check_unique(ids: list[str], path: Path) -> None:
    duplicates = sorted(i for i, n in Counter(ids).items() if n > 1)
    if duplicates:
        raise DataError(f"{path}: duplicate ids {duplicates[:5]}")


def load_pairs(path: Path) -> list[PairExample]:
    """
    Load training pairs; rows without an id get "pair-<row>" (0-based).

    Raises:
        DataError: On malformed rows or duplicate ids
    """
    records = read_jsonl(path, PairRecord)
    pairs = [
        PairExample.from_text(r.x, r.y, r.negatives, pair_id=r.id if r.id is not None else f"pair-{i}")
        for i, r in enumerate(records)
    ]
    _check_unique([p.pair_id for p in pairs], Path(path))
    return pairs


def load_texts(path: Path) -> dict[str, str]:
    """id -> text for a corpus or query file, in file order."""
    records = read_jsonl(path, TextRecord)
    _check_unique([r.id for r in records], Path(path))
    return {r.id: r.text for r in records}


def load_labeled_texts(path: Path) -> list[LabeledTextRecord]:
    return read_jsonl(path, LabeledTextRecord)


def load_labels(path: Path) -> list[LabelRecord]:
    labels = read_jsonl(path, LabelRecord)
    _check_unique([r.label for r in labels], Path(path))
    return labels


def load_similarity_pairs(path: Path) -> list[SimilarityRecord]:
    return read_jsonl(path, SimilarityRecord)


def _is_header(first_row: pd.Series) -> bool:
    return bool(pd.isna(pd.to_numeric(first_row.iloc[2], errors="coerce")))


def load_qrels(path: Path) -> QRels:
    """
    Read binary relevance judgments.

    Rows with relevance > 0 are relevant. A query listed only with zero
    relevance maps to an empty set.

    Raises:
        DataError: If the file is missing or malformed
    """
    path = _require_file(path)
    try:
        table = pd.read_csv(path, sep="\t", header=None, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path}: qrels file is empty") from e
    except pd.errors.ParserError as e:
        raise DataError(f"{path}: malformed qrels: {e}") from e

    if table.shape[1] != 3:
        raise DataError(f"{path}: expected 3 tab-separated columns (query_id, doc_id, relevance), got {table.shape[1]}")
    if _is_header(table.iloc[0]):
        logger.debug(f"Skipping qrels header row {list(table.iloc[0])}")
        table = table.iloc[1:]
    table.columns = ["query_id", "doc_id", "relevance"]

    relevance = pd.to_numeric(table["relevance"], errors="coerce")
    bad = relevance.isna()
    if bad.any():
        row = table[bad].iloc[0]
        raise DataError(f"{path}: non-numeric relevance {row['relevance']!r} for query {row['query_id']!r}")

    qrels: QRels = {qid: set() for qid in table["query_id"]}
    for qid, did in table.loc[relevance > 0, ["query_id", "doc_id"]].itertuples(index=False):
        qrels[qid].add(did)
    logger.info(f"Read judgments for {len(qrels)} queries from {path}")
    return qrels


@dataclass
class RetrievalSet:
    """
    Corpus, queries and relevance judgments for one retrieval benchmark.

    Attributes:
        corpus: doc id -> text (embedded on the y side)
        queries: query id -> text (embedded on the x side)
        qrels: query id -> relevant doc ids
    """

    corpus: dict[str, str | bytes]
    queries: dict[str, str | bytes]
    qrels: QRels = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.corpus:
            raise DataError("retrieval corpus is empty")
        if not self.queries:
            raise DataError("retrieval set has no queries")


def load_retrieval_set(corpus: Path, queries: Path, qrels: Path) -> RetrievalSet:
    return RetrievalSet(corpus=load_texts(corpus), queries=load_texts(queries), qrels=load_qrels(qrels))
