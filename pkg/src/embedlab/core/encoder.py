"""
Transformer encoder producing unit-norm embeddings.

Pre-layer-norm blocks with learned positional embeddings and a final layer
norm. The embedding of a sequence is the last-layer hidden state at its
end-of-sequence delimiter, L2-normalized.

Ragged batches are right-padded with PAD after the end delimiter; padded
keys are masked out of attention so they cannot change any real position.
"""

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from embedlab.config.defaults import DEFAULT_EMBED_BATCH_SIZE
from embedlab.config.schema import EncoderConfig
from embedlab.errors import EncoderError

from .checkpoint import load_checkpoint
from .tensor import (
    Tensor,
    add,
    gelu,
    index,
    l2_normalize,
    layer_norm,
    matmul,
    reshape,
    scale,
    softmax,
    take,
    transpose,
)
from .tokenizer import PAD, Side, TokenSequence, Vocabulary

logger = logging.getLogger(__name__)


def parameter_shapes(config: EncoderConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape for every encoder parameter, in canonical order."""
    d, f = config.d_model, config.d_ff
    shapes: dict[str, tuple[int, ...]] = {
        "tok_emb": (config.vocab_size, d),
        "pos_emb": (config.max_seq_len, d),
    }
    for i in range(config.n_layers):
        p = f"blocks.{i}"
        shapes |= {
            f"{p}.ln1.gamma": (d,),
            f"{p}.ln1.beta": (d,),
            f"{p}.attn.wq": (d, d),
            f"{p}.attn.bq": (d,),
            f"{p}.attn.wk": (d, d),
            f"{p}.attn.bk": (d,),
            f"{p}.attn.wv": (d, d),
            f"{p}.attn.bv": (d,),
            f"{p}.attn.wo": (d, d),
            f"{p}.attn.bo": (d,),
            f"{p}.ln2.gamma": (d,),
            f"{p}.ln2.beta": (d,),
            f"{p}.mlp.w1": (d, f),
            f"{p}.mlp.b1": (f,),
            f"{p}.mlp.w2": (f, d),
            f"{p}.mlp.b2": (d,),
        }
    shapes |= {"ln_f.gamma": (d,), "ln_f.beta": (d,)}
    return shapes


@dataclass
class EncoderWeights:
    """All encoder parameters as named tensors."""

    tensors: dict[str, Tensor] = field(default_factory=dict)

    @classmethod
    def init(cls, config: EncoderConfig, rng: np.random.Generator) -> "EncoderWeights":
        """
        Random initialization: normal(0, init_std) for embeddings and projections,
        zeros for biases and layer-norm shifts, ones for layer-norm gains.
        """
        tensors: dict[str, Tensor] = {}
        for name, shape in parameter_shapes(config).items():
            leaf = name.rsplit(".", 1)[-1]
            if leaf == "gamma":
                data = np.ones(shape)
            elif leaf == "beta" or leaf.startswith("b"):
                data = np.zeros(shape)
            else:
                data = rng.normal(0.0, config.init_std, size=shape)
            tensors[name] = Tensor(data, requires_grad=True, name=name)
        return cls(tensors)

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], config: EncoderConfig) -> "EncoderWeights":
        weights = cls({name: Tensor(arr, requires_grad=True, name=name) for name, arr in arrays.items()})
        weights.validate(config)
        return weights

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.tensors.items()}

    def validate(self, config: EncoderConfig) -> None:
        """Check names, shapes and finiteness against the config."""
        expected = parameter_shapes(config)
        if set(expected) != set(self.tensors):
            missing = sorted(set(expected) - set(self.tensors))
            extra = sorted(set(self.tensors) - set(expected))
            raise EncoderError(f"weights do not match config (missing={missing[:3]}, unexpected={extra[:3]})")
        for name, shape in expected.items():
            t = self.tensors[name]
            if t.shape != shape:
                raise EncoderError(f"{name}: expected shape {shape}, got {t.shape}")
            if not np.all(np.isfinite(t.data)):
                raise EncoderError(f"{name}: non-finite values")

    def parameters(self) -> dict[str, Tensor]:
        return self.tensors

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]


def _check_ids(config: EncoderConfig, ids: np.ndarray) -> None:
    if ids.shape[-1] > config.max_seq_len:
        raise EncoderError(f"sequence of length {ids.shape[-1]} exceeds max_seq_len {config.max_seq_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise EncoderError(f"token id out of range [0, {config.vocab_size})")


def _attention(
    weights: EncoderWeights,
    config: EncoderConfig,
    prefix: str,
    h: Tensor,
    mask: np.ndarray,
) -> Tensor:
    """Multi-head self-attention; mask is (B, 1, T, T) with True = may attend."""
    B, T, d = h.shape
    H, dh = config.n_heads, config.head_dim

    def heads(w: str, b: str) -> Tensor:
        proj = add(matmul(h, weights[f"{prefix}.{w}"]), weights[f"{prefix}.{b}"])
        return transpose(reshape(proj, (B, T, H, dh)), (0, 2, 1, 3))

    q = heads("wq", "bq")
    k = heads("wk", "bk")
    v = heads("wv", "bv")
    scores = scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dh))
    att = softmax(scores, axis=-1, mask=mask)
    out = reshape(transpose(matmul(att, v), (0, 2, 1, 3)), (B, T, d))
    return add(matmul(out, weights[f"{prefix}.wo"]), weights[f"{prefix}.bo"])


def _attention_mask(config: EncoderConfig, lengths: np.ndarray, T: int) -> np.ndarray:
    key_valid = np.arange(T)[None, :] < lengths[:, None]  # (B, T)
    mask = np.broadcast_to(key_valid[:, None, None, :], (len(lengths), 1, T, T))
    if config.attention_mode == "causal":
        mask = mask & np.tril(np.ones((T, T), dtype=bool))[None, None]
    return mask


def forward_ids(weights: EncoderWeights, config: EncoderConfig, ids: np.ndarray, lengths: np.ndarray) -> Tensor:
    """
    Hidden states for a right-padded id matrix.

    Args:
        ids: (B, T) integer ids
        lengths: (B,) number of real tokens per row

    Returns:
        (B, T, d_model) last-layer hidden states (final layer norm applied)
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 2 or ids.shape[1] == 0:
        raise EncoderError(f"expected a non-empty (batch, length) id matrix, got shape {ids.shape}")
    _check_ids(config, ids)
    B, T = ids.shape

    x = add(take(weights["tok_emb"], ids), index(weights["pos_emb"], slice(0, T)))
    mask = _attention_mask(config, np.asarray(lengths), T)

    for i in range(config.n_layers):
        p = f"blocks.{i}"
        h = layer_norm(x, weights[f"{p}.ln1.gamma"], weights[f"{p}.ln1.beta"])
        x = add(x, _attention(weights, config, f"{p}.attn", h, mask))
        h = layer_norm(x, weights[f"{p}.ln2.gamma"], weights[f"{p}.ln2.beta"])
        h = gelu(add(matmul(h, weights[f"{p}.mlp.w1"]), weights[f"{p}.mlp.b1"]))
        x = add(x, add(matmul(h, weights[f"{p}.mlp.w2"]), weights[f"{p}.mlp.b2"]))

    return layer_norm(x, weights["ln_f.gamma"], weights["ln_f.beta"])


def forward(weights: EncoderWeights, config: EncoderConfig, seq: TokenSequence) -> Tensor:
    """
    Last-layer hidden states for one sequence, shape (len, d_model).

    Raises:
        EncoderError: If an id is out of range or the sequence is too long
    """
    ids = np.asarray(seq.ids, dtype=np.int64)[None, :]
    hidden = forward_ids(weights, config, ids, np.array([len(seq)]))
    return reshape(hidden, (len(seq), config.d_model))


def _eos_position(seq: TokenSequence) -> int:
    eos = Vocabulary.eos(seq.side)
    if not seq.ids or seq.ids[-1] != eos or seq.ids.count(eos) != 1:
        raise EncoderError(f"sequence must end with its single EOS delimiter (side {Side(seq.side).value})")
    return len(seq.ids) - 1


def embed(weights: EncoderWeights, config: EncoderConfig, seq: TokenSequence) -> Tensor:
    """Unit-norm embedding: hidden state at the EOS position, shape (d_model,)."""
    pos = _eos_position(seq)
    hidden = forward(weights, config, seq)
    return l2_normalize(index(hidden, pos))


def pad_batch(seqs: Sequence[TokenSequence]) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad sequences with PAD; returns (ids (B, T), lengths (B,))."""
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    ids = np.full((len(seqs), int(lengths.max())), PAD, dtype=np.int64)
    for row, seq in enumerate(seqs):
        ids[row, : len(seq)] = seq.ids
    return ids, lengths


def embed_batch(weights: EncoderWeights, config: EncoderConfig, seqs: Sequence[TokenSequence]) -> Tensor:
    """
    Embed M sequences at once, shape (M, d_model).

    Row i equals embed(seqs[i]); padding never changes a row.
    """
    if not seqs:
        raise EncoderError("embed_batch needs at least one sequence")
    eos_positions = np.array([_eos_position(s) for s in seqs], dtype=np.int64)
    ids, lengths = pad_batch(seqs)
    hidden = forward_ids(weights, config, ids, lengths)
    return l2_normalize(index(hidden, (np.arange(len(seqs)), eos_positions)), axis=-1)


def _chunks(items: Sequence, size: int) -> Iterator[Sequence]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


@dataclass
class EmbeddingModel:
    """
    Frozen encoder bundled with its tokenizer for inference.

    Example:
        >>> model = EmbeddingModel.from_checkpoint(Path("run.cpte"))
        >>> vectors = model.embed_texts(["how do I sort a list"], Side.X)
    """

    config: EncoderConfig
    vocab: Vocabulary
    weights: EncoderWeights
    exp_tau: float = 1.0
    step: int = 0
    source: str | None = None

    @classmethod
    def from_checkpoint(cls, path: Path) -> "EmbeddingModel":
        ckpt = load_checkpoint(Path(path))
        weights = EncoderWeights.from_arrays(ckpt.weights, ckpt.encoder_config)
        return cls(
            config=ckpt.encoder_config,
            vocab=ckpt.vocab,
            weights=weights,
            exp_tau=float(np.exp(ckpt.tau)),
            step=ckpt.step,
            source=str(path),
        )

    def embed_texts(
        self,
        texts: Sequence[str | bytes],
        side: Side,
        batch_size: int = DEFAULT_EMBED_BATCH_SIZE,
        progress: bool = False,
    ) -> np.ndarray:
        """Embed texts on one side; returns an (N, d_model) matrix of unit rows."""
        if not texts:
            return np.zeros((0, self.config.d_model))
        seqs = [self.vocab.encode(t, side) for t in texts]
        blocks = []
        chunks = _chunks(seqs, batch_size)
        if progress:
            chunks = tqdm(chunks, total=-(-len(seqs) // batch_size), desc=f"embed ({Side(side).value})", unit="batch")
        for chunk in chunks:
            blocks.append(embed_batch(self.weights, self.config, chunk).data)
        return np.concatenate(blocks, axis=0)
