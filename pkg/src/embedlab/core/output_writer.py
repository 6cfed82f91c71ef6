"""
Output writer for embedlab results.

All files are written atomically: contents go to a temporary sibling file
which is then renamed over the target. Results tables are CSV (pandas),
embedding matrices are raw little-endian float32 with a JSON sidecar
manifest.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def atomic_write_bytes(path: Path, payload: bytes) -> Path:
    """Write bytes to path via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return path


def atomic_write_text(path: Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_jsonl(path: Path, rows: list[dict[str, Any]]) -> Path:
    """One JSON object per line, keys in insertion order."""
    lines = [json.dumps(row, ensure_ascii=False) for row in rows]
    return atomic_write_text(path, "".join(f"{line}\n" for line in lines))


def write_csv(path: Path, table: pd.DataFrame) -> Path:
    return atomic_write_text(path, table.to_csv(index=False, lineterminator="\n"))


def embedding_manifest_path(path: Path) -> Path:
    return Path(f"{path}.json")


def write_embeddings(path: Path, matrix: np.ndarray, ids: list[str], metadata: dict[str, Any] | None = None) -> Path:
    """
    Export an (N, d) matrix as little-endian float32 plus a JSON manifest.

    The manifest sits next to the data file as <path>.json and records
    rows, dim, dtype and ids in row order.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError(f"expected one row per id, got matrix {matrix.shape} for {len(ids)} ids")
    atomic_write_bytes(path, matrix.astype("<f4").tobytes(order="C"))
    manifest = {
        "rows": int(matrix.shape[0]),
        "dim": int(matrix.shape[1]),
        "dtype": "<f4",
        "ids": list(ids),
        **(metadata or {}),
    }
    atomic_write_text(embedding_manifest_path(path), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote {matrix.shape[0]} x {matrix.shape[1]} embeddings to {path}")
    return path


def read_embeddings(path: Path) -> tuple[np.ndarray, dict[str, Any]]:
    """Inverse of write_embeddings; returns the float32 matrix and its manifest."""
    manifest = json.loads(embedding_manifest_path(path).read_text(encoding="utf-8"))
    data = np.frombuffer(Path(path).read_bytes(), dtype="<f4")
    return data.reshape(manifest["rows"], manifest["dim"]), manifest
