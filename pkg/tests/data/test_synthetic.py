"""
Tests for synthetic noisy-copy pairs.
"""

import pytest

from embedlab.data import generate_noisy_pairs, pairs_to_retrieval_set


class TestGenerateNoisyPairs:
    """Tests for the synthetic pair generator."""

    def test_count_and_ids(self):
        """Test n pairs numbered with the prefix."""
        pairs = generate_noisy_pairs(5, seed=1, id_prefix="t")
        assert [p.pair_id for p in pairs] == ["t-0", "t-1", "t-2", "t-3", "t-4"]

    def test_seeded(self):
        """Test equal seeds give equal data and different seeds differ."""
        assert generate_noisy_pairs(20, seed=4) == generate_noisy_pairs(20, seed=4)
        assert generate_noisy_pairs(20, seed=4) != generate_noisy_pairs(20, seed=5)

    def test_distinct_queries(self):
        """Test every x is unique."""
        pairs = generate_noisy_pairs(300, seed=0, min_words=1, max_words=1)
        assert len({p.x for p in pairs}) == 300

    def test_word_counts(self):
        """Test x holds between min_words and max_words lowercase words."""
        for pair in generate_noisy_pairs(50, seed=2, min_words=2, max_words=3):
            words = pair.x.decode().split(" ")
            assert 2 <= len(words) <= 3
            assert all(w.isalpha() and w.islower() for w in words)

    def test_no_noise_copies(self):
        """Test a zero noise rate makes y an exact copy."""
        assert all(p.x == p.y for p in generate_noisy_pairs(30, seed=3, noise_rate=0.0))

    def test_noise_changes_some_pairs(self):
        """Test noisy copies differ from x but keep most characters."""
        pairs = generate_noisy_pairs(100, seed=3, noise_rate=0.2)
        assert any(p.x != p.y for p in pairs)

    @pytest.mark.parametrize(
        "kwargs",
        [{"n": 0}, {"n": 3, "min_words": 0}, {"n": 3, "min_words": 4, "max_words": 2}, {"n": 3, "noise_rate": 1.0}],
    )
    def test_invalid_arguments(self, kwargs):
        """Test out-of-range arguments are rejected."""
        with pytest.raises(ValueError):
            generate_noisy_pairs(**kwargs)


class TestPairsToRetrievalSet:
    """Tests for turning pairs into a retrieval benchmark."""

    def test_each_query_judges_its_own_document(self):
        """Test queries are x sides, documents are y sides, one judgment each."""
        pairs = generate_noisy_pairs(4, seed=0)
        dataset = pairs_to_retrieval_set(pairs)
        assert dataset.queries["syn-2"] == pairs[2].x
        assert dataset.corpus["syn-2"] == pairs[2].y
        assert dataset.qrels == {p.pair_id: {p.pair_id} for p in pairs}
