"""
Synthetic paired data for smoke tests, learnability checks and ablations.

x is a string of random lowercase words; y is a noisy copy of x in which a
fraction of the characters are replaced by random printable characters and
short noise tokens are occasionally inserted between words. Matching y to
its own x is easy for a trained encoder and impossible for a random one.
"""

import logging
import string

import numpy as np

from .records import PairExample, RetrievalSet

logger = logging.getLogger(__name__)

_LETTERS = np.array(list(string.ascii_lowercase))
_NOISE = np.array(list(string.ascii_letters + string.digits + "#%&*+=@"))


def _random_word(rng: np.random.Generator, min_chars: int = 3, max_chars: int = 8) -> str:
    return "".join(rng.choice(_LETTERS, size=int(rng.integers(min_chars, max_chars + 1))))


def _add_noise(text: str, rng: np.random.Generator, noise_rate: float) -> str:
    chars = np.array(list(text))
    flip = (rng.random(len(chars)) < noise_rate) & (chars != " ")
    chars[flip] = rng.choice(_NOISE, size=int(flip.sum()))
    words = "".join(chars).split(" ")
    out: list[str] = []
    for word in words:
        out.append(word)
        if rng.random() < noise_rate:
            out.append("".join(rng.choice(_NOISE, size=2)))
    return " ".join(out)


def generate_noisy_pairs(
    n: int,
    seed: int = 0,
    min_words: int = 2,
    max_words: int = 6,
    noise_rate: float = 0.1,
    id_prefix: str = "syn",
) -> list[PairExample]:
    """
    Generate n pairs with distinct x strings.

    Args:
        n: Number of pairs
        seed: RNG seed; equal seeds give identical datasets
        min_words: Minimum words per x
        max_words: Maximum words per x
        noise_rate: Per-character replacement probability, also the per-word
            probability of inserting a noise token
        id_prefix: Pair ids are "<prefix>-<i>"

    Returns:
        List of PairExample with ids "<prefix>-0" .. "<prefix>-<n-1>"

    Example:
        >>> pairs = generate_noisy_pairs(2000, seed=0)
        >>> train, held_out = pairs[:1800], pairs[1800:]
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 1 <= min_words <= max_words:
        raise ValueError(f"need 1 <= min_words <= max_words, got {min_words}, {max_words}")
    if not 0.0 <= noise_rate < 1.0:
        raise ValueError(f"noise_rate must be in [0, 1), got {noise_rate}")

    rng = np.random.default_rng(seed)
    seen: set[str] = set()
    pairs: list[PairExample] = []
    while len(pairs) < n:
        n_words = int(rng.integers(min_words, max_words + 1))
        x = " ".join(_random_word(rng) for _ in range(n_words))
        if x in seen:
            continue
        seen.add(x)
        y = _add_noise(x, rng, noise_rate)
        pairs.append(PairExample.from_text(x, y, pair_id=f"{id_prefix}-{len(pairs)}"))
    logger.debug(f"Generated {n} synthetic pairs (seed={seed}, noise_rate={noise_rate})")
    return pairs


def pairs_to_retrieval_set(pairs: list[PairExample]) -> RetrievalSet:
    """Queries are the x sides, documents the y sides; each query's only relevant doc is its own y."""
    return RetrievalSet(
        corpus={p.pair_id: p.y for p in pairs},
        queries={p.pair_id: p.x for p in pairs},
        qrels={p.pair_id: {p.pair_id} for p in pairs},
    )
