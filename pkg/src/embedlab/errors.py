"""
Exception hierarchy for embedlab.

Library code raises these; only the CLI turns them into exit codes:
configuration problems exit with 1, data and format problems with 2.
"""

import math


class EmbedLabError(Exception):
    """Base class for all embedlab errors."""


class TensorError(EmbedLabError):
    """Raised when a tensor operation cannot be evaluated."""


class ShapeError(TensorError):
    """Raised when tensor dimensions do not agree."""

    def __init__(self, op: str, *shapes: tuple[int, ...]) -> None:
        self.op = op
        self.shapes = shapes
        rendered = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: dimension mismatch {rendered}")


class TokenizationError(EmbedLabError):
    """Raised for empty inputs or malformed token sequences."""


class EncoderError(EmbedLabError):
    """Raised for invalid encoder inputs (ids out of range, overlong or malformed sequences)."""


class ContrastiveError(EmbedLabError):
    """Raised for degenerate similarity or loss inputs."""


class TrainingError(EmbedLabError):
    """Raised when training cannot start or diverges."""

    def __init__(
        self,
        message: str,
        step: int | None = None,
        exp_tau: float | None = None,
        grad_norm: float | None = None,
        param_norms: dict[str, float] | None = None,
    ) -> None:
        self.step = step
        self.exp_tau = exp_tau
        self.grad_norm = grad_norm
        self.param_norms = param_norms or {}
        details = []
        if step is not None:
            details.append(f"step={step}")
        if exp_tau is not None:
            details.append(f"exp_tau={exp_tau:.6g}")
        if grad_norm is not None:
            details.append(f"grad_norm={grad_norm:.6g}")
        # non-finite norms first, then largest
        worst = sorted(
            self.param_norms.items(),
            key=lambda kv: (math.isfinite(kv[1]), -abs(kv[1]) if math.isfinite(kv[1]) else 0.0),
        )
        if worst:
            details.append("largest grads: " + ", ".join(f"{k}={v:.3g}" for k, v in worst[:3]))
        super().__init__(f"{message} ({'; '.join(details)})" if details else message)


class FormatError(EmbedLabError):
    """Raised for corrupt, truncated or version-mismatched container files."""


class DataError(EmbedLabError):
    """Raised for missing or malformed input data files."""


class ConfigError(EmbedLabError):
    """Raised when a configuration file cannot be read or merged."""


class VectorIndexError(EmbedLabError):
    """Raised for invalid index builds or queries."""


class EvaluationError(EmbedLabError):
    """Raised when an evaluation protocol receives inconsistent inputs."""


class MiningError(EmbedLabError):
    """Raised when a source file cannot be scanned for code pairs."""
