"""
Contrastive training loop.

Each step draws M pairs, embeds both sides with the shared encoder, builds
the (M, M + H) logit matrix, takes the symmetric loss, backpropagates, clips
the global gradient norm and applies Adam to every encoder weight and to the
temperature.

Determinism:
- Batches come from a per-epoch permutation seeded with (seed, epoch); the
  last partial batch of an epoch is dropped.
- After every optimizer step the weights, temperature and Adam moments are
  rounded to float32. A checkpoint therefore captures the live state
  exactly, and resuming from it reproduces the uninterrupted run.
"""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

from embedlab.config.schema import EvalConfig, TrainConfig
from embedlab.core.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from embedlab.core.contrastive import PairBatch, Temperature, append_hard_negatives, logit_matrix, symmetric_loss
from embedlab.core.encoder import EmbeddingModel, EncoderWeights, embed_batch
from embedlab.core.tensor import Tape, Tensor, zero_grad
from embedlab.core.tokenizer import Side, TokenSequence, Vocabulary
from embedlab.data.records import PairExample, RetrievalSet
from embedlab.errors import TrainingError
from embedlab.evaluation.retrieval import evaluate_retrieval
from embedlab.logging_config import log_train_step

logger = logging.getLogger(__name__)

EVAL_METRIC = "eval_mrr@10"
METRIC_COLUMNS = ["step", "loss", "exp_tau", "grad_norm"]


def snap_float32(array: np.ndarray) -> np.ndarray:
    """Round to the nearest float32 value, keeping float64 storage."""
    return np.asarray(array, dtype=np.float32).astype(np.float64)


def warmup_lr(step: int, total_steps: int, learning_rate: float, warmup_fraction: float) -> float:
    """
    Linear warmup over the first warmup_fraction of steps, then constant.

    step is 0-based; the first step already uses a non-zero rate.
    """
    warmup_steps = max(1, int(warmup_fraction * total_steps))
    return learning_rate * min(1.0, (step + 1) / warmup_steps)


def global_grad_norm(params: dict[str, Tensor]) -> float:
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float(np.sum(p.grad * p.grad))
    return math.sqrt(total)


def clip_grad_norm(params: dict[str, Tensor], max_norm: float) -> float:
    """
    Scale all gradients so their global L2 norm is at most max_norm.

    Returns:
        The norm before clipping
    """
    norm = global_grad_norm(params)
    if norm > max_norm:
        factor = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad = p.grad * factor
    return norm


class Adam:
    """
    Adam with bias correction over a fixed set of named parameters.

    Example:
        >>> opt = Adam(params, beta1=0.9, beta2=0.98, eps=1e-8)
        >>> opt.step(lr=1e-3)
    """

    def __init__(self, params: dict[str, Tensor], beta1: float, beta2: float, eps: float) -> None:
        self.params = params
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def load_state(self, t: int, m: dict[str, np.ndarray], v: dict[str, np.ndarray]) -> None:
        if set(m) != set(self.params) or set(v) != set(self.params):
            raise TrainingError("optimizer state does not match the model parameters")
        for name, p in self.params.items():
            if m[name].shape != p.shape or v[name].shape != p.shape:
                raise TrainingError(f"optimizer state for {name} has the wrong shape")
        self.t = t
        self.m = {k: np.array(a, dtype=np.float64) for k, a in m.items()}
        self.v = {k: np.array(a, dtype=np.float64) for k, a in v.items()}

    def step(self, lr: float) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * p.grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * p.grad * p.grad
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def snap_float32(self) -> None:
        for name in self.params:
            self.m[name] = snap_float32(self.m[name])
            self.v[name] = snap_float32(self.v[name])


@dataclass(frozen=True)
class _EncodedPair:
    x: TokenSequence
    y: TokenSequence
    negatives: tuple[TokenSequence, ...]


def encode_pairs(pairs: list[PairExample], vocab: Vocabulary) -> list[_EncodedPair]:
    return [
        _EncodedPair(
            x=vocab.encode(p.x, Side.X),
            y=vocab.encode(p.y, Side.Y),
            negatives=tuple(vocab.encode(n, Side.Y) for n in p.hard_negatives),
        )
        for p in pairs
    ]


class BatchSampler:
    """
    Deterministic batch order: shuffle once per epoch, drop the last partial batch.

    The batch for a step depends only on (seed, n, batch_size, step), so a
    resumed run sees exactly the batches the uninterrupted run would have.
    """

    def __init__(self, n: int, batch_size: int, seed: int) -> None:
        if batch_size > n:
            raise TrainingError(f"batch size {batch_size} exceeds the dataset size {n}")
        self.n = n
        self.batch_size = batch_size
        self.seed = seed
        self.steps_per_epoch = n // batch_size
        self._epoch = -1
        self._perm = np.arange(n)

    def position(self, step: int) -> tuple[int, int]:
        """(epoch, batch within epoch) for a 0-based step."""
        return divmod(step, self.steps_per_epoch)

    def indices(self, step: int) -> np.ndarray:
        epoch, offset = self.position(step)
        if epoch != self._epoch:
            self._perm = np.random.default_rng([self.seed, epoch]).permutation(self.n)
            self._epoch = epoch
        return self._perm[offset * self.batch_size : (offset + 1) * self.batch_size]


@dataclass
class TrainResult:
    """
    Final checkpoint plus the per-step metrics log.

    Attributes:
        checkpoint: Training state after the last step
        metrics: One row per step: step (1-based), loss, exp_tau, grad_norm,
            plus eval_mrr@10 when a held-out set was given
        checkpoint_paths: Periodic checkpoints written during the run
    """

    checkpoint: Checkpoint
    metrics: pd.DataFrame
    checkpoint_paths: list[Path]

    @property
    def final_loss(self) -> float:
        return float(self.metrics["loss"].iloc[-1])


class Trainer:
    """
    Owns the model, temperature and optimizer for one training run.

    Example:
        >>> trainer = Trainer(config)
        >>> result = trainer.fit(pairs, held_out=dev_set)
    """

    def __init__(self, config: TrainConfig, resume_from: Checkpoint | None = None) -> None:
        self.config = config
        enc = config.encoder
        self.vocab = Vocabulary(max_seq_len=enc.max_seq_len)

        if resume_from is not None:
            self._check_compatible(resume_from, "resume")
            self.weights = EncoderWeights.from_arrays(resume_from.weights, enc)
            self.temperature = Temperature.from_value(resume_from.tau, config.max_logit_scale)
            self.step = resume_from.step
        else:
            self.weights = EncoderWeights.init(enc, np.random.default_rng(config.seed))
            self.temperature = Temperature.init(config.init_temperature, config.max_logit_scale)
            self.step = 0
            if config.init_from:
                self._warm_start(Path(config.init_from))

        self.params: dict[str, Tensor] = {**self.weights.parameters(), "tau": self.temperature.tau}
        self.optimizer = Adam(self.params, config.beta1, config.beta2, config.adam_eps)
        if resume_from is not None:
            self.optimizer.load_state(resume_from.adam_t, resume_from.adam_m, resume_from.adam_v)
        self._snap()

    def _check_compatible(self, ckpt: Checkpoint, purpose: str) -> None:
        if ckpt.encoder_config != self.config.encoder:
            raise TrainingError(f"cannot {purpose}: checkpoint encoder configuration differs from the run's")
        if purpose == "resume" and ckpt.train_config:
            for key in ("batch_size", "seed"):
                if ckpt.train_config.get(key) != getattr(self.config, key):
                    raise TrainingError(
                        f"cannot resume: {key}={getattr(self.config, key)} but the checkpoint used "
                        f"{ckpt.train_config.get(key)}"
                    )

    def _warm_start(self, path: Path) -> None:
        ckpt = load_checkpoint(path)
        self._check_compatible(ckpt, "initialize from checkpoint")
        self.weights = EncoderWeights.from_arrays(ckpt.weights, self.config.encoder)
        tau = min(ckpt.tau, math.log(self.config.max_logit_scale))
        self.temperature = Temperature.from_value(tau, self.config.max_logit_scale)
        logger.info(f"Initialized encoder weights and temperature from {path} (step {ckpt.step})")

    def _snap(self) -> None:
        for p in self.params.values():
            p.data = snap_float32(p.data)
        # float32 rounding must not push exp(tau) past the clamp
        limit = math.log(self.config.max_logit_scale)
        tau = np.float32(self.temperature.tau.item())
        while tau > limit:
            tau = np.nextafter(tau, np.float32(-np.inf))
        self.temperature.tau.data = np.array(float(tau))
        self.optimizer.snap_float32()

    def model(self) -> EmbeddingModel:
        """Inference view of the current weights (shares arrays; do not train while using it)."""
        return EmbeddingModel(
            config=self.config.encoder,
            vocab=self.vocab,
            weights=self.weights,
            exp_tau=self.temperature.exp_tau,
            step=self.step,
        )

    def checkpoint(self, sampler: BatchSampler | None = None) -> Checkpoint:
        epoch, offset = sampler.position(self.step) if sampler else (0, 0)
        return Checkpoint(
            encoder_config=self.config.encoder,
            vocab=self.vocab,
            weights={name: t.data.copy() for name, t in self.weights.parameters().items()},
            tau=float(self.temperature.tau.item()),
            step=self.step,
            adam_t=self.optimizer.t,
            adam_m={k: v.copy() for k, v in self.optimizer.m.items()},
            adam_v={k: v.copy() for k, v in self.optimizer.v.items()},
            rng={"seed": self.config.seed, "epoch": epoch, "batch": offset},
            train_config=self.config.model_dump(mode="json"),
        )

    def _param_norms(self) -> dict[str, float]:
        return {
            name: float(np.linalg.norm(p.grad)) if p.grad is not None else 0.0 for name, p in self.params.items()
        }

    def train_step(self, batch: PairBatch, lr: float) -> tuple[float, float]:
        """
        One optimizer update.

        Returns:
            (loss, gradient norm before clipping)

        Raises:
            TrainingError: If the loss or the gradient norm is not finite
        """
        enc = self.config.encoder
        zero_grad(self.params)
        with Tape() as tape:
            X = embed_batch(self.weights, enc, batch.x)
            Y = embed_batch(self.weights, enc, batch.y)
            Y = append_hard_negatives(batch, Y, lambda seqs: embed_batch(self.weights, enc, seqs))
            loss = symmetric_loss(logit_matrix(X, Y, self.temperature))
        loss_value = loss.item()
        if math.isfinite(loss_value):
            tape.backward(loss)
        grad_norm = global_grad_norm(self.params)
        if not (math.isfinite(loss_value) and math.isfinite(grad_norm)):
            raise TrainingError(
                f"non-finite {'loss' if not math.isfinite(loss_value) else 'gradient'} ({loss_value})",
                step=self.step + 1,
                exp_tau=self.temperature.exp_tau,
                grad_norm=grad_norm,
                param_norms=self._param_norms(),
            )

        if self.config.grad_clip_norm is not None:
            clip_grad_norm(self.params, self.config.grad_clip_norm)
        self.optimizer.step(lr)
        self.temperature.clamp_()
        self._snap()
        self.step += 1
        return loss_value, grad_norm

    def _evaluate(self, held_out: RetrievalSet) -> float:
        return evaluate_retrieval(self.model(), held_out, eval_config=EvalConfig(ks=[10]))["mrr@10"]

    def fit(
        self,
        data: Iterable[PairExample],
        held_out: RetrievalSet | None = None,
        checkpoint_dir: Path | None = None,
        progress: bool = False,
        log_every: int = 50,
    ) -> TrainResult:
        """
        Train until config.total_steps.

        Args:
            data: Training pairs (at least batch_size of them)
            held_out: Optional retrieval set scored every eval_every steps
            checkpoint_dir: Where periodic checkpoints go when checkpoint_every > 0
            progress: Show a progress bar
            log_every: Log a step line every N steps (and on the last step)

        Raises:
            TrainingError: If the data holds fewer pairs than one batch, or on divergence
        """
        config = self.config
        pairs = list(data)
        encoded = encode_pairs(pairs, self.vocab)
        sampler = BatchSampler(len(encoded), config.batch_size, config.seed)

        if config.checkpoint_every and checkpoint_dir is None:
            raise TrainingError("checkpoint_every is set but no checkpoint directory was given")
        if self.step >= config.total_steps:
            logger.warning(f"Checkpoint is already at step {self.step} >= total_steps {config.total_steps}")

        logger.info(
            f"Training on {len(encoded)} pairs: batch size {config.batch_size}, "
            f"steps {self.step + 1}..{config.total_steps}, seed {config.seed}"
        )
        rows: list[dict[str, float]] = []
        saved: list[Path] = []
        steps = range(self.step, config.total_steps)
        for step in tqdm(steps, desc="train", unit="step", disable=not progress):
            chosen = [encoded[i] for i in sampler.indices(step)]
            batch = PairBatch(
                x=[e.x for e in chosen],
                y=[e.y for e in chosen],
                negatives=[list(e.negatives) for e in chosen],
            )
            lr = warmup_lr(step, config.total_steps, config.learning_rate, config.warmup_fraction)
            loss, grad_norm = self.train_step(batch, lr)
            row = {"step": self.step, "loss": loss, "exp_tau": self.temperature.exp_tau, "grad_norm": grad_norm}

            if held_out is not None:
                due = config.eval_every and self.step % config.eval_every == 0
                row[EVAL_METRIC] = self._evaluate(held_out) if due or self.step == config.total_steps else np.nan
                if not np.isnan(row[EVAL_METRIC]):
                    logger.info(f"step {self.step} | {EVAL_METRIC} {row[EVAL_METRIC]:.4f}")
            rows.append(row)

            if self.step % log_every == 0 or self.step == config.total_steps:
                log_train_step(logger, self.step, loss, row["exp_tau"], grad_norm, lr)
            if config.checkpoint_every and self.step % config.checkpoint_every == 0:
                path = Path(checkpoint_dir) / f"step-{self.step:08d}.cpte"
                saved.append(save_checkpoint(self.checkpoint(sampler), path))

        columns = METRIC_COLUMNS + ([EVAL_METRIC] if held_out is not None else [])
        metrics = pd.DataFrame(rows, columns=columns)
        return TrainResult(checkpoint=self.checkpoint(sampler), metrics=metrics, checkpoint_paths=saved)


def train(
    config: TrainConfig,
    data: Iterable[PairExample],
    held_out: RetrievalSet | None = None,
    resume_from: Checkpoint | None = None,
    checkpoint_dir: Path | None = None,
    progress: bool = False,
) -> TrainResult:
    """
    Run contrastive training.

    Args:
        config: Training configuration (batch size, optimizer, steps, seed, encoder)
        data: Training pairs
        held_out: Optional held-out retrieval set for periodic MRR@10
        resume_from: Continue from this checkpoint instead of a fresh init
        checkpoint_dir: Output directory for periodic checkpoints
        progress: Show a progress bar

    Returns:
        TrainResult with the final checkpoint and the metrics log

    Raises:
        TrainingError: If data has fewer than batch_size pairs, the checkpoint is
            incompatible, or the loss diverges

    Example:
        >>> result = train(TrainConfig(batch_size=32, total_steps=300), pairs)
        >>> result.final_loss < 0.1 * math.log(32)
        True
    """
    trainer = Trainer(config, resume_from=resume_from)
    return trainer.fit(data, held_out=held_out, checkpoint_dir=checkpoint_dir, progress=progress)
