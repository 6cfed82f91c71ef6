"""
Core building blocks for contrastive text embeddings.

This module contains core functionality for:
- Reverse-mode automatic differentiation over numpy arrays
- Byte-level tokenization with side-specific delimiters
- The Transformer encoder and EOS-token embedding extraction
- The symmetric in-batch contrastive objective
- Binary container framing, checkpoint persistence and atomic output writing
"""

from .checkpoint import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    Checkpoint,
    checkpoint_from_bytes,
    checkpoint_to_bytes,
    load_checkpoint,
    save_checkpoint,
)
from .container import decode_container, encode_container, read_container, write_container
from .contrastive import (
    PairBatch,
    SimilarityMatrix,
    Temperature,
    append_hard_negatives,
    cosine_sim,
    logit_matrix,
    symmetric_loss,
)
from .encoder import (
    EmbeddingModel,
    EncoderWeights,
    embed,
    embed_batch,
    forward,
    forward_ids,
    pad_batch,
    parameter_shapes,
)
from .output_writer import (
    atomic_write_bytes,
    atomic_write_text,
    embedding_manifest_path,
    read_embeddings,
    write_csv,
    write_embeddings,
    write_jsonl,
)
from .tensor import Tape, Tensor, backward, grad_check, zero_grad
from .tokenizer import EOS_X, EOS_Y, PAD, SOS_X, SOS_Y, Side, TokenSequence, Vocabulary

__all__ = [
    # Autodiff
    "Tape",
    "Tensor",
    "backward",
    "grad_check",
    "zero_grad",
    # Tokenizer
    "EOS_X",
    "EOS_Y",
    "PAD",
    "SOS_X",
    "SOS_Y",
    "Side",
    "TokenSequence",
    "Vocabulary",
    # Encoder
    "EmbeddingModel",
    "EncoderWeights",
    "embed",
    "embed_batch",
    "forward",
    "forward_ids",
    "pad_batch",
    "parameter_shapes",
    # Contrastive objective
    "PairBatch",
    "SimilarityMatrix",
    "Temperature",
    "append_hard_negatives",
    "cosine_sim",
    "logit_matrix",
    "symmetric_loss",
    # Persistence
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "checkpoint_from_bytes",
    "checkpoint_to_bytes",
    "decode_container",
    "encode_container",
    "load_checkpoint",
    "read_container",
    "save_checkpoint",
    "write_container",
    # Output writing
    "atomic_write_bytes",
    "atomic_write_text",
    "embedding_manifest_path",
    "read_embeddings",
    "write_csv",
    "write_embeddings",
    "write_jsonl",
]
