"""
Logging configuration for embedlab.

Logs go to standard error so that standard output stays reserved for
command results. If EMBEDLAB_LOG_FILE is set, records are also appended
to that file.
"""

import logging
import os
import sys
from pathlib import Path

from embedlab.config.defaults import ENV_LOG_FILE

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# marks handlers installed here so repeated setup replaces only our own
_HANDLER_TAG = "_embedlab_handler"


def setup_logging(verbose: bool = False, quiet: bool = False) -> logging.Logger:
    """
    Configure the root logger for a CLI invocation.

    Args:
        verbose: Enable debug logging
        quiet: Suppress all logging except errors

    Returns:
        The root logger.
    """
    if quiet:
        level = logging.ERROR
    elif verbose:
        level = logging.DEBUG
    else:
        level = logging.INFO

    root = logging.getLogger()
    root.setLevel(level)

    for handler in [h for h in root.handlers if getattr(h, _HANDLER_TAG, False)]:
        root.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT)

    stderr_handler = logging.StreamHandler(sys.stderr)
    stderr_handler.setFormatter(formatter)
    setattr(stderr_handler, _HANDLER_TAG, True)
    root.addHandler(stderr_handler)

    log_file = os.getenv(ENV_LOG_FILE)
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path)
        file_handler.setFormatter(formatter)
        setattr(file_handler, _HANDLER_TAG, True)
        root.addHandler(file_handler)

    return root


def log_train_step(
    logger: logging.Logger,
    step: int,
    loss: float,
    exp_tau: float,
    grad_norm: float,
    lr: float,
) -> None:
    """
    Log one optimizer step in a single pipe-separated line.

    Log format:
        step 120 | loss 0.4213 | exp_tau 14.29 | grad_norm 0.871 | lr 1.0e-03
    """
    logger.info(f"step {step} | loss {loss:.4f} | exp_tau {exp_tau:.2f} | grad_norm {grad_norm:.3f} | lr {lr:.1e}")
