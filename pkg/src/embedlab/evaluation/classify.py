"""
Classification protocols on frozen embeddings.

- linear_probe: multinomial logistic regression trained by full-batch
  gradient descent with an L2 penalty, initialized at zero.
- knn_classify: majority vote among the k most cosine-similar training
  examples.
- zero_shot_classify: the label whose description embedding is closest to
  the query embedding, optionally with the description wrapped in a prompt
  template.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from embedlab.config.defaults import DEFAULT_KNN_K, DEFAULT_PROBE_L2, DEFAULT_PROBE_LR, DEFAULT_PROBE_STEPS
from embedlab.core.encoder import EmbeddingModel
from embedlab.core.tokenizer import Side
from embedlab.errors import EvaluationError

logger = logging.getLogger(__name__)

LABEL_SLOT = "{label}"


@dataclass(frozen=True)
class LabeledEmbedding:
    vector: np.ndarray
    label: str


def _stack(items: Sequence[LabeledEmbedding], what: str) -> tuple[np.ndarray, list[str]]:
    if not items:
        raise EvaluationError(f"{what} set is empty")
    matrix = np.stack([np.asarray(item.vector, dtype=np.float64) for item in items])
    return matrix, [item.label for item in items]


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise EvaluationError("cosine similarity is undefined for a zero vector")
    return matrix / norms


# ---------------------------------------------------------------------------
# Linear probe
# ---------------------------------------------------------------------------


def linear_probe(
    train: Sequence[LabeledEmbedding],
    test: Sequence[LabeledEmbedding],
    l2: float = DEFAULT_PROBE_L2,
    steps: int = DEFAULT_PROBE_STEPS,
    lr: float = DEFAULT_PROBE_LR,
) -> float:
    """
    Fit a softmax classifier on train embeddings and return test accuracy.

    Args:
        train: Training examples (at least 2 classes)
        test: Evaluation examples; every label must occur in train
        l2: Weight-decay coefficient (bias is not penalized)
        steps: Full-batch gradient steps
        lr: Step size

    Raises:
        EvaluationError: If train has fewer than 2 classes or test has an unseen label
    """
    X, y_train = _stack(train, "probe training")
    Xt, y_test = _stack(test, "probe test")
    classes = sorted(set(y_train))
    if len(classes) < 2:
        raise EvaluationError(f"linear probe needs at least 2 classes, got {classes}")
    unseen = sorted(set(y_test) - set(classes))
    if unseen:
        raise EvaluationError(f"test labels not seen in training: {unseen[:5]}")

    class_index = {c: i for i, c in enumerate(classes)}
    targets = np.zeros((len(y_train), len(classes)))
    targets[np.arange(len(y_train)), [class_index[c] for c in y_train]] = 1.0

    W = np.zeros((X.shape[1], len(classes)))
    b = np.zeros(len(classes))
    n = X.shape[0]
    for _ in range(steps):
        logits = X @ W + b
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        residual = (probs - targets) / n
        W -= lr * (X.T @ residual + l2 * W)
        b -= lr * residual.sum(axis=0)

    predicted = np.argmax(Xt @ W + b, axis=1)
    truth = np.array([class_index[c] for c in y_test])
    accuracy = float(np.mean(predicted == truth))
    logger.info(f"Linear probe: {len(classes)} classes, {n} train / {len(y_test)} test, accuracy {accuracy:.4f}")
    return accuracy


# ---------------------------------------------------------------------------
# k-NN
# ---------------------------------------------------------------------------


def _vote(labels: list[str], sims: np.ndarray, k: int) -> str:
    order = np.argsort(-sims, kind="stable")[:k]
    counts: dict[str, int] = {}
    mass: dict[str, float] = {}
    for i in order:
        label = labels[i]
        counts[label] = counts.get(label, 0) + 1
        mass[label] = mass.get(label, 0.0) + float(sims[i])
    # most votes, then larger summed similarity, then smaller label
    return min(counts, key=lambda label: (-counts[label], -mass[label], label))


def knn_classify_many(train: Sequence[LabeledEmbedding], queries: np.ndarray, k: int = DEFAULT_KNN_K) -> list[str]:
    """knn_classify for each row of an (n, d) query matrix."""
    X, labels = _stack(train, "k-NN training")
    if not 1 <= k <= len(labels):
        raise EvaluationError(f"k must be in [1, {len(labels)}] (training set size), got {k}")
    queries = _unit_rows(np.atleast_2d(np.asarray(queries, dtype=np.float64)))
    sims = queries @ _unit_rows(X).T
    return [_vote(labels, row, k) for row in sims]


def knn_classify(train: Sequence[LabeledEmbedding], query: np.ndarray, k: int = DEFAULT_KNN_K) -> str:
    """
    Majority label among the k training examples most cosine-similar to query.

    Vote ties go to the label whose neighbors have the larger summed
    similarity, then to the lexicographically smaller label.

    Raises:
        EvaluationError: If train is empty or k > len(train)
    """
    return knn_classify_many(train, np.asarray(query)[None, :], k)[0]


def knn_accuracy(train: Sequence[LabeledEmbedding], test: Sequence[LabeledEmbedding], k: int = DEFAULT_KNN_K) -> float:
    Xt, truth = _stack(test, "k-NN test")
    predicted = knn_classify_many(train, Xt, k)
    return float(np.mean([p == t for p, t in zip(predicted, truth, strict=True)]))


# ---------------------------------------------------------------------------
# Zero-shot
# ---------------------------------------------------------------------------


def validate_template(template: str | None) -> None:
    if template is not None and template.count(LABEL_SLOT) != 1:
        raise EvaluationError(f"prompt template must contain exactly one {LABEL_SLOT} slot: {template!r}")


def label_texts(labels: Sequence[tuple[str, str]], template: str | None = None) -> list[str]:
    """Description text per label, wrapped in the template when one is given."""
    validate_template(template)
    if not labels:
        raise EvaluationError("zero-shot classification needs at least one label")
    texts = []
    for label, description in labels:
        if not description:
            raise EvaluationError(f"label {label!r} has an empty description")
        texts.append(template.replace(LABEL_SLOT, description) if template else description)
    return texts


def zero_shot_predict(query_vectors: np.ndarray, label_vectors: np.ndarray, labels: Sequence[str]) -> list[str]:
    """Argmax-cosine label per query row; exact ties go to the earlier label."""
    label_vectors = _unit_rows(np.atleast_2d(np.asarray(label_vectors, dtype=np.float64)))
    if label_vectors.shape[0] != len(labels):
        raise EvaluationError(f"{label_vectors.shape[0]} label vectors for {len(labels)} labels")
    query_vectors = _unit_rows(np.atleast_2d(np.asarray(query_vectors, dtype=np.float64)))
    best = np.argmax(query_vectors @ label_vectors.T, axis=1)
    return [labels[i] for i in best]


def zero_shot_classify(
    labels: Sequence[tuple[str, str]],
    query_text: str,
    model: EmbeddingModel,
    template: str | None = None,
    label_side: Side = Side.Y,
) -> str:
    """
    Assign the label whose description is nearest to the query.

    The query is embedded on the x side and label descriptions on label_side
    (y by default).

    Args:
        labels: (label, description) pairs
        query_text: Text to classify
        model: Frozen embedding model
        template: Optional prompt such as "this is an example of a {label} movie review."

    Raises:
        EvaluationError: If there are no labels, a description is empty or the template is malformed
    """
    texts = label_texts(labels, template)
    label_vectors = model.embed_texts(texts, label_side)
    query_vector = model.embed_texts([query_text], Side.X)
    return zero_shot_predict(query_vector, label_vectors, [label for label, _ in labels])[0]


def zero_shot_accuracy(
    labels: Sequence[tuple[str, str]],
    examples: Sequence[tuple[str, str]],
    model: EmbeddingModel,
    template: str | None = None,
    label_side: Side = Side.Y,
    progress: bool = False,
) -> float:
    """Accuracy of zero_shot_classify over (text, gold label) examples, labels embedded once."""
    if not examples:
        raise EvaluationError("zero-shot evaluation needs at least one example")
    known = {label for label, _ in labels}
    unknown = sorted({gold for _, gold in examples} - known)
    if unknown:
        raise EvaluationError(f"example labels missing from the label set: {unknown[:5]}")
    label_vectors = model.embed_texts(label_texts(labels, template), label_side)
    query_vectors = model.embed_texts([text for text, _ in examples], Side.X, progress=progress)
    predicted = zero_shot_predict(query_vectors, label_vectors, [label for label, _ in labels])
    accuracy = float(np.mean([p == gold for p, (_, gold) in zip(predicted, examples, strict=True)]))
    logger.info(f"Zero-shot: {len(labels)} labels, {len(examples)} examples, accuracy {accuracy:.4f}")
    return accuracy


def embed_labeled(
    records: Sequence[tuple[str, str]], model: EmbeddingModel, side: Side = Side.X, progress: bool = False
) -> list[LabeledEmbedding]:
    """Embed (text, label) records into LabeledEmbedding items."""
    vectors = model.embed_texts([text for text, _ in records], side, progress=progress)
    return [LabeledEmbedding(vector=v, label=label) for v, (_, label) in zip(vectors, records, strict=True)]
