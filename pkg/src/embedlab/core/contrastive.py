"""
Symmetric in-batch contrastive objective with a trainable temperature.

For a batch of M pairs the logits are cosine(x_i, y_j) * exp(tau). The loss
averages cross-entropy over rows (x -> y) and over columns (y -> x), with the
diagonal as targets. Explicit hard negatives add extra columns that only
enlarge the row-direction softmax; the column direction stays M x M.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from embedlab.config.defaults import DEFAULT_INIT_TEMPERATURE, DEFAULT_MAX_LOGIT_SCALE
from embedlab.errors import ContrastiveError, ShapeError

from .tensor import Tensor, add, concat, exp, index, l2_normalize, log_softmax, matmul, mean, mul, scale, transpose
from .tokenizer import TokenSequence

logger = logging.getLogger(__name__)


@dataclass
class Temperature:
    """Log-space logit scale; exp(tau) is kept in (0, clamp_max_scale]."""

    tau: Tensor
    clamp_max_scale: float = DEFAULT_MAX_LOGIT_SCALE

    def __post_init__(self) -> None:
        if self.tau.size != 1:
            raise ContrastiveError(f"tau must be a scalar, got shape {self.tau.shape}")
        if self.exp_tau > self.clamp_max_scale * (1 + 1e-12):
            raise ContrastiveError(f"exp(tau)={self.exp_tau:.6g} exceeds clamp {self.clamp_max_scale}")

    @classmethod
    def init(
        cls,
        temperature: float = DEFAULT_INIT_TEMPERATURE,
        clamp_max_scale: float = DEFAULT_MAX_LOGIT_SCALE,
    ) -> "Temperature":
        """Start at exp(tau) = 1 / temperature."""
        return cls.from_value(float(np.log(1.0 / temperature)), clamp_max_scale)

    @classmethod
    def from_value(cls, tau: float, clamp_max_scale: float = DEFAULT_MAX_LOGIT_SCALE) -> "Temperature":
        return cls(Tensor(np.array(tau), requires_grad=True, name="tau"), clamp_max_scale)

    @property
    def exp_tau(self) -> float:
        return float(np.exp(self.tau.item()))

    def clamp_(self) -> None:
        """Project tau back into range after an optimizer update."""
        limit = np.log(self.clamp_max_scale)
        if self.tau.data > limit:
            self.tau.data = np.array(limit)


@dataclass
class SimilarityMatrix:
    """Logits of shape (M, M + H); the first M columns are the in-batch documents."""

    logits: Tensor
    n_pairs: int

    @property
    def n_hard_negatives(self) -> int:
        return self.logits.shape[1] - self.n_pairs


def cosine_sim(vx: np.ndarray, vy: np.ndarray) -> float:
    """
    Cosine similarity of two vectors, in [-1, 1].

    Raises:
        ContrastiveError: If either vector is zero
    """
    vx = np.asarray(vx, dtype=np.float64)
    vy = np.asarray(vy, dtype=np.float64)
    if vx.shape != vy.shape:
        raise ShapeError("cosine_sim", vx.shape, vy.shape)
    nx, ny = np.linalg.norm(vx), np.linalg.norm(vy)
    if nx == 0.0 or ny == 0.0:
        raise ContrastiveError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(vx, vy) / (nx * ny), -1.0, 1.0))


def logit_matrix(X: Tensor, Y: Tensor, temperature: Temperature) -> SimilarityMatrix:
    """
    Entry (i, j) = cosine(x_i, y_j) * exp(tau).

    Args:
        X: (M, d) query-side embeddings
        Y: (M + H, d) document-side embeddings; rows M.. are hard negatives
    """
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ShapeError("logit_matrix", X.shape, Y.shape)
    M = X.shape[0]
    if M < 1 or Y.shape[0] < M:
        raise ContrastiveError(f"need M >= 1 queries and at least M documents, got {X.shape} and {Y.shape}")
    cos = matmul(l2_normalize(X), transpose(l2_normalize(Y)))
    return SimilarityMatrix(logits=mul(cos, exp(temperature.tau)), n_pairs=M)


def _diagonal_nll(log_probs: Tensor, M: int) -> Tensor:
    labels = np.arange(M)
    return scale(mean(index(log_probs, (labels, labels))), -1.0)


def symmetric_loss(sm: SimilarityMatrix) -> Tensor:
    """
    Mean of the row-direction and column-direction cross-entropies.

    Each direction is averaged over the batch, so magnitudes are comparable
    across batch sizes.
    """
    M = sm.n_pairs
    if M < 1:
        raise ContrastiveError("symmetric_loss needs at least one pair")
    loss_rows = _diagonal_nll(log_softmax(sm.logits, axis=1), M)
    square = index(sm.logits, (slice(None), slice(0, M)))
    loss_cols = _diagonal_nll(log_softmax(square, axis=0), M)
    return scale(add(loss_rows, loss_cols), 0.5)


@dataclass
class PairBatch:
    """M aligned token sequences plus optional explicit negatives per example."""

    x: list[TokenSequence]
    y: list[TokenSequence]
    negatives: list[list[TokenSequence]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ContrastiveError(f"x and y sides differ in length: {len(self.x)} vs {len(self.y)}")
        if not self.negatives:
            self.negatives = [[] for _ in self.x]
        if len(self.negatives) != len(self.x):
            raise ContrastiveError("negatives must have one (possibly empty) list per example")

    @property
    def size(self) -> int:
        return len(self.x)

    @property
    def n_negatives(self) -> int:
        return sum(len(n) for n in self.negatives)


def append_hard_negatives(
    batch: PairBatch,
    Y: Tensor,
    embed_fn: Callable[[Sequence[TokenSequence]], Tensor],
) -> Tensor:
    """
    Embed the batch's explicit negatives and append them below Y.

    Negatives are never targets. A negative identical to its own positive is
    kept but logged.
    """
    flat: list[TokenSequence] = []
    for i, negs in enumerate(batch.negatives):
        for neg in negs:
            if neg.ids == batch.y[i].ids:
                logger.warning(f"Hard negative for example {i} is identical to its positive; keeping it")
            flat.append(neg)
    if not flat:
        return Y
    return concat([Y, embed_fn(flat)], axis=0)
