"""
Tests for the symmetric in-batch contrastive loss and temperature.
"""

import logging
import math

import numpy as np
import pytest

from embedlab.core.contrastive import (
    PairBatch,
    Temperature,
    append_hard_negatives,
    cosine_sim,
    logit_matrix,
    symmetric_loss,
)
from embedlab.core.tensor import Tape, Tensor, backward, grad_check
from embedlab.core.tokenizer import Side, Vocabulary
from embedlab.errors import ContrastiveError, ShapeError


def _loss(X: np.ndarray, Y: np.ndarray, tau: float = 0.0) -> float:
    return symmetric_loss(logit_matrix(Tensor(X), Tensor(Y), Temperature.from_value(tau))).item()


class TestTemperature:
    """Tests for the log-space logit scale."""

    def test_initial_scale(self):
        """Test exp(tau) starts at 1/0.07."""
        assert Temperature.init().exp_tau == pytest.approx(1 / 0.07)

    def test_clamp(self):
        """Test clamp_ projects exp(tau) down to the maximum scale."""
        t = Temperature.from_value(1.0)
        t.tau.data = np.array(10.0)
        t.clamp_()
        assert t.exp_tau == pytest.approx(100.0)

    def test_clamp_leaves_small_values(self):
        """Test values under the limit are untouched."""
        t = Temperature.from_value(2.0)
        t.clamp_()
        assert t.tau.item() == 2.0

    def test_rejects_value_over_clamp(self):
        """Test construction above the limit fails."""
        with pytest.raises(ContrastiveError, match="exceeds clamp"):
            Temperature.from_value(math.log(200.0))

    def test_tau_is_trainable(self):
        """Test tau receives a gradient through the logits."""
        t = Temperature.from_value(0.5)
        X = Tensor(np.eye(3) + 0.1)
        with Tape():
            loss = symmetric_loss(logit_matrix(X, X, t))
        backward(loss)
        assert t.tau.grad is not None
        assert t.tau.grad != 0.0


class TestCosine:
    """Tests for cosine_sim."""

    def test_values(self):
        """Test parallel, orthogonal and scaled vectors."""
        assert cosine_sim(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == 0.0
        assert cosine_sim(np.array([1.0, 1.0]), np.array([3.0, 3.0])) == pytest.approx(1.0)
        assert cosine_sim(np.array([1.0, 0.0]), np.array([-5.0, 0.0])) == pytest.approx(-1.0)

    def test_zero_vector(self):
        """Test a zero vector is an error."""
        with pytest.raises(ContrastiveError, match="zero vector"):
            cosine_sim(np.zeros(3), np.ones(3))

    def test_shape_mismatch(self):
        """Test vectors of different dimension."""
        with pytest.raises(ShapeError):
            cosine_sim(np.ones(2), np.ones(3))


class TestLogitMatrix:
    """Tests for the scaled similarity matrix."""

    def test_entries_are_scaled_cosines(self):
        """Test (i, j) = cos(x_i, y_j) * exp(tau)."""
        rng = np.random.default_rng(0)
        X, Y = rng.normal(size=(3, 4)), rng.normal(size=(5, 4))
        sm = logit_matrix(Tensor(X), Tensor(Y), Temperature.from_value(math.log(10.0)))
        assert sm.logits.shape == (3, 5)
        assert sm.n_pairs == 3
        assert sm.n_hard_negatives == 2
        assert sm.logits.data[1, 4] == pytest.approx(10.0 * cosine_sim(X[1], Y[4]))

    def test_too_few_documents(self):
        """Test Y must have at least M rows."""
        with pytest.raises(ContrastiveError):
            logit_matrix(Tensor(np.ones((3, 2))), Tensor(np.ones((2, 2))), Temperature.from_value(0.0))

    def test_dimension_mismatch(self):
        """Test embeddings of different widths."""
        with pytest.raises(ShapeError):
            logit_matrix(Tensor(np.ones((2, 2))), Tensor(np.ones((2, 3))), Temperature.from_value(0.0))


class TestSymmetricLoss:
    """Tests for loss values and gradients."""

    @pytest.mark.parametrize("M", [1, 2, 4, 7])
    def test_uniform_logits_give_log_m(self, M):
        """Test identical embeddings everywhere give ln M."""
        X = np.tile([1.0, 2.0, 3.0], (M, 1))
        assert _loss(X, X, tau=1.3) == pytest.approx(math.log(M), abs=1e-12)

    def test_identity_two_pairs(self):
        """Test orthonormal pairs at unit scale give ln(1 + e^-1)."""
        assert _loss(np.eye(2), np.eye(2)) == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-12)
        assert _loss(np.eye(2), np.eye(2)) == pytest.approx(0.313262, abs=1e-6)

    def test_symmetric_in_sides(self):
        """Test swapping the query and document sides leaves the loss unchanged."""
        rng = np.random.default_rng(1)
        X, Y = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
        assert _loss(X, Y, 0.7) == pytest.approx(_loss(Y, X, 0.7), abs=1e-12)

    def test_invariant_to_pair_order(self):
        """Test permuting the pairs jointly leaves the loss unchanged."""
        rng = np.random.default_rng(2)
        X, Y = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
        perm = rng.permutation(6)
        assert _loss(X, Y) == pytest.approx(_loss(X[perm], Y[perm]), abs=1e-12)

    def test_hard_negatives_raise_the_loss(self):
        """Test extra columns only add competition in the row direction."""
        rng = np.random.default_rng(3)
        X, Y = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
        with_negs = np.vstack([Y, rng.normal(size=(2, 3))])
        assert _loss(X, with_negs) > _loss(X, Y)

    def test_perfect_alignment_approaches_zero(self):
        """Test well-separated pairs at a large scale drive the loss down."""
        assert _loss(np.eye(4), np.eye(4), tau=math.log(100.0)) < 1e-10

    def test_gradient_wrt_embeddings(self):
        """Test finite differences through normalization, logits and both directions."""
        rng = np.random.default_rng(4)
        Y = Tensor(rng.normal(size=(6, 5)))
        temperature = Temperature.from_value(1.2)

        def f(x: Tensor) -> Tensor:
            return symmetric_loss(logit_matrix(x, Y, temperature))

        assert grad_check(f, rng.normal(size=(4, 5))) < 1e-4

    def test_gradient_wrt_tau(self):
        """Test the temperature gradient."""
        rng = np.random.default_rng(5)
        X, Y = Tensor(rng.normal(size=(3, 4))), Tensor(rng.normal(size=(3, 4)))

        def f(tau: Tensor) -> Tensor:
            return symmetric_loss(logit_matrix(X, Y, Temperature(tau)))

        assert grad_check(f, np.array(0.8)) < 1e-4

    @pytest.mark.parametrize("seed", range(40))
    def test_gradient_random_shapes(self, seed):
        """Test embeddings and tau gradients for random batch sizes, widths and temperatures."""
        rng = np.random.default_rng(1000 + seed)
        M, d = int(rng.integers(1, 9)), int(rng.integers(2, 17))
        tau = float(rng.uniform(-1.0, math.log(20.0)))
        X, Y = rng.normal(size=(M, d)), rng.normal(size=(M, d))

        def wrt_x(x: Tensor) -> Tensor:
            return symmetric_loss(logit_matrix(x, Tensor(Y), Temperature.from_value(tau)))

        def wrt_y(y: Tensor) -> Tensor:
            return symmetric_loss(logit_matrix(Tensor(X), y, Temperature.from_value(tau)))

        def wrt_tau(t: Tensor) -> Tensor:
            return symmetric_loss(logit_matrix(Tensor(X), Tensor(Y), Temperature(t)))

        assert grad_check(wrt_x, X) < 1e-4
        assert grad_check(wrt_y, Y) < 1e-4
        assert grad_check(wrt_tau, np.array(tau)) < 1e-4


class TestPairBatch:
    """Tests for batches and explicit negatives."""

    @pytest.fixture
    def vocab(self) -> Vocabulary:
        return Vocabulary(max_seq_len=16)

    def test_mismatched_sides(self, vocab):
        """Test x and y must align."""
        with pytest.raises(ContrastiveError, match="differ"):
            PairBatch(x=[vocab.encode("a", Side.X)], y=[])

    def test_default_negatives(self, vocab):
        """Test every example gets an empty negative list."""
        batch = PairBatch(x=[vocab.encode("a", Side.X)] * 2, y=[vocab.encode("b", Side.Y)] * 2)
        assert batch.negatives == [[], []]
        assert batch.size == 2
        assert batch.n_negatives == 0

    def test_append_without_negatives(self, vocab):
        """Test Y is returned unchanged when there is nothing to add."""
        batch = PairBatch(x=[vocab.encode("a", Side.X)], y=[vocab.encode("b", Side.Y)])
        Y = Tensor(np.ones((1, 2)))
        assert append_hard_negatives(batch, Y, lambda seqs: pytest.fail("should not embed")) is Y

    def test_append_negatives(self, vocab, caplog):
        """Test negatives are embedded below Y and duplicates of the positive are logged."""
        y = vocab.encode("b", Side.Y)
        batch = PairBatch(
            x=[vocab.encode("a", Side.X)] * 2,
            y=[y, vocab.encode("c", Side.Y)],
            negatives=[[y], [vocab.encode("d", Side.Y), vocab.encode("e", Side.Y)]],
        )
        Y = Tensor(np.zeros((2, 3)))
        with caplog.at_level(logging.WARNING):
            out = append_hard_negatives(batch, Y, lambda seqs: Tensor(np.ones((len(seqs), 3))))
        assert out.shape == (5, 3)
        assert np.all(out.data[2:] == 1.0)
        assert "identical to its positive" in caplog.text
