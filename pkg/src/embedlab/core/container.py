"""
Binary container framing shared by checkpoints and vector indices.

Layout:
    4-byte magic | u32 version | u64 metadata length   (little-endian)
    UTF-8 JSON metadata (sorted keys), including a "tensors" manifest
    raw little-endian array blobs, concatenated in manifest order

Each manifest entry records name, dtype, shape, offset (from the start of
the blob section) and nbytes.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any

import numpy as np

from embedlab.errors import FormatError

from .output_writer import atomic_write_bytes

logger = logging.getLogger(__name__)

HEADER = struct.Struct("<4sIQ")
SUPPORTED_DTYPES = {"<f4", "<f8"}


def encode_container(magic: bytes, version: int, metadata: dict[str, Any], arrays: list[tuple[str, np.ndarray, str]]) -> bytes:
    """
    Serialize metadata and arrays.

    Args:
        arrays: (name, array, dtype) triples; dtype is "<f4" or "<f8"
    """
    if len(magic) != 4:
        raise ValueError(f"magic must be 4 bytes, got {magic!r}")
    if "tensors" in metadata:
        raise ValueError("metadata key 'tensors' is reserved for the array manifest")

    manifest = []
    blobs = []
    offset = 0
    for name, array, dtype in arrays:
        if dtype not in SUPPORTED_DTYPES:
            raise ValueError(f"unsupported dtype {dtype} for {name}")
        blob = np.ascontiguousarray(array, dtype=dtype).tobytes(order="C")
        manifest.append({"name": name, "dtype": dtype, "shape": list(np.shape(array)), "offset": offset, "nbytes": len(blob)})
        blobs.append(blob)
        offset += len(blob)

    meta_bytes = json.dumps({**metadata, "tensors": manifest}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return HEADER.pack(magic, version, len(meta_bytes)) + meta_bytes + b"".join(blobs)


def decode_container(payload: bytes, magic: bytes, version: int, source: str = "<bytes>") -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """
    Parse and validate a container.

    Returns:
        (metadata without the manifest, name -> float64 array)

    Raises:
        FormatError: On wrong magic, unsupported version, truncation or trailing bytes
    """
    if len(payload) < HEADER.size:
        raise FormatError(f"{source}: truncated header ({len(payload)} bytes)")
    found_magic, found_version, meta_len = HEADER.unpack_from(payload, 0)
    if found_magic != magic:
        raise FormatError(f"{source}: bad magic {found_magic!r}, expected {magic!r}")
    if found_version != version:
        raise FormatError(f"{source}: unsupported format version {found_version} (this build reads version {version})")

    meta_end = HEADER.size + meta_len
    if meta_end > len(payload):
        raise FormatError(f"{source}: truncated metadata ({len(payload) - HEADER.size} of {meta_len} bytes)")
    try:
        metadata = json.loads(payload[HEADER.size : meta_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{source}: corrupt metadata: {e}") from e
    if not isinstance(metadata, dict) or not isinstance(metadata.get("tensors"), list):
        raise FormatError(f"{source}: metadata has no tensor manifest")

    manifest = metadata.pop("tensors")
    arrays: dict[str, np.ndarray] = {}
    expected_offset = 0
    for entry in manifest:
        try:
            name, dtype, shape = entry["name"], entry["dtype"], tuple(int(s) for s in entry["shape"])
            offset, nbytes = int(entry["offset"]), int(entry["nbytes"])
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{source}: malformed manifest entry {entry!r}") from e
        if dtype not in SUPPORTED_DTYPES:
            raise FormatError(f"{source}: unsupported dtype {dtype} for {name}")
        if offset != expected_offset or nbytes != int(np.prod(shape, dtype=np.int64)) * np.dtype(dtype).itemsize:
            raise FormatError(f"{source}: inconsistent manifest entry for {name}")
        start = meta_end + offset
        if start + nbytes > len(payload):
            raise FormatError(f"{source}: truncated data for {name}")
        raw = np.frombuffer(payload, dtype=dtype, count=nbytes // np.dtype(dtype).itemsize, offset=start)
        arrays[name] = raw.astype(np.float64).reshape(shape)
        expected_offset += nbytes

    if meta_end + expected_offset != len(payload):
        raise FormatError(f"{source}: {len(payload) - meta_end - expected_offset} unexpected trailing bytes")
    return metadata, arrays


def write_container(path: Path, magic: bytes, version: int, metadata: dict[str, Any], arrays: list[tuple[str, np.ndarray, str]]) -> Path:
    payload = encode_container(magic, version, metadata, arrays)
    atomic_write_bytes(path, payload)
    logger.debug(f"Wrote {magic.decode()} container ({len(payload)} bytes) to {path}")
    return Path(path)


def read_container(path: Path, magic: bytes, version: int) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"file not found: {path}")
    return decode_container(path.read_bytes(), magic, version, source=str(path))
