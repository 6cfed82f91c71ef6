"""
Byte-level tokenizer with side-specific delimiters.

Content ids are the raw byte values 0-255. Five reserved ids follow:
start/end delimiters for the query side (x) and the document side (y),
and a padding id used only inside ragged batches.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any

from embedlab.config.defaults import DEFAULT_MAX_SEQ_LEN
from embedlab.config.schema import BYTE_VOCAB_SIZE
from embedlab.errors import TokenizationError

logger = logging.getLogger(__name__)

N_BYTES = 256
SOS_X = 256
EOS_X = 257
SOS_Y = 258
EOS_Y = 259
PAD = 260


class Side(str, Enum):
    """Which half of a training pair a text is encoded as."""

    X = "x"
    Y = "y"


@dataclass(frozen=True)
class TokenSequence:
    """Delimiter-wrapped token ids for one input side."""

    ids: tuple[int, ...]
    side: Side

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class Vocabulary:
    """
    Byte vocabulary plus reserved delimiter ids.

    Immutable; encode/decode are pure and safe to call concurrently.
    """

    max_seq_len: int = DEFAULT_MAX_SEQ_LEN

    def __post_init__(self) -> None:
        if self.max_seq_len < 3:
            raise TokenizationError(f"max_seq_len must leave room for content, got {self.max_seq_len}")

    @property
    def size(self) -> int:
        return BYTE_VOCAB_SIZE

    @staticmethod
    def sos(side: Side) -> int:
        return SOS_X if Side(side) is Side.X else SOS_Y

    @staticmethod
    def eos(side: Side) -> int:
        return EOS_X if Side(side) is Side.X else EOS_Y

    def encode(self, text: bytes | str, side: Side) -> TokenSequence:
        """
        Wrap content bytes in the side's delimiters.

        Content longer than max_seq_len - 2 bytes is truncated (prefix kept);
        the end delimiter is always present.

        Raises:
            TokenizationError: If text is empty
        """
        side = Side(side)
        raw = text.encode("utf-8") if isinstance(text, str) else bytes(text)
        if not raw:
            raise TokenizationError("cannot encode empty text")
        budget = self.max_seq_len - 2
        if len(raw) > budget:
            logger.debug(f"Truncating {len(raw)} bytes to {budget}")
            raw = raw[:budget]
        return TokenSequence(ids=(self.sos(side), *raw, self.eos(side)), side=side)

    def decode(self, seq: TokenSequence) -> bytes:
        """
        Strip delimiters and return the content bytes.

        Raises:
            TokenizationError: If the delimiter structure is malformed
        """
        ids = seq.ids
        side = Side(seq.side)
        if len(ids) < 3:
            raise TokenizationError(f"sequence too short to hold content: {len(ids)} ids")
        if ids[0] != self.sos(side):
            raise TokenizationError(f"sequence does not start with SOS for side {side.value}")
        if ids[-1] != self.eos(side):
            raise TokenizationError(f"sequence does not end with EOS for side {side.value}")
        content = ids[1:-1]
        bad = [i for i in content if not 0 <= i < N_BYTES]
        if bad:
            raise TokenizationError(f"non-content ids inside sequence: {bad[:5]}")
        return bytes(content)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "byte",
            "size": self.size,
            "max_seq_len": self.max_seq_len,
            "reserved": {"SOS_X": SOS_X, "EOS_X": EOS_X, "SOS_Y": SOS_Y, "EOS_Y": EOS_Y, "PAD": PAD},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Vocabulary":
        expected = cls(max_seq_len=int(data.get("max_seq_len", DEFAULT_MAX_SEQ_LEN))).to_dict()
        if data != expected:
            raise TokenizationError(f"unsupported vocabulary description: {data}")
        return cls(max_seq_len=expected["max_seq_len"])
