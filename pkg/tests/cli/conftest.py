"""
Fixtures for CLI tests.

Commands run in-process through run(); standard output is captured by
capsys, which is not a terminal, so results come back as JSON.
"""

import json
import logging
from collections.abc import Callable, Iterator
from pathlib import Path

import pytest

from embedlab.cli import run
from embedlab.core import write_jsonl
from embedlab.data import generate_noisy_pairs

TINY_CONFIG = """
[train]
batch_size = 4
total_steps = 3
seed = 0

[train.encoder]
n_layers = 1
n_heads = 2
d_model = 8
d_ff = 16
max_seq_len = 32
"""


@pytest.fixture(autouse=True)
def reset_cli_logging() -> Iterator[None]:
    """Drop the handlers a command installs so later tests do not log into closed streams."""
    yield
    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, "_embedlab_handler", False)]:
        root.removeHandler(handler)
        handler.close()
    root.setLevel(logging.WARNING)


@pytest.fixture
def cli(capsys) -> Callable[..., tuple[int, str]]:
    """Run a command; returns (exit code, captured stdout)."""

    def invoke(*args: object) -> tuple[int, str]:
        capsys.readouterr()
        code = run([str(a) for a in args])
        return code, capsys.readouterr().out

    return invoke


@pytest.fixture
def cli_json(cli) -> Callable[..., dict]:
    """Run a quiet command that must succeed and parse its JSON result."""

    def invoke(*args: object) -> dict:
        code, out = cli(*args, "--quiet")
        assert code == 0, out
        return json.loads(out)

    return invoke


@pytest.fixture
def run_config(tmp_path: Path) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(TINY_CONFIG)
    return path


@pytest.fixture
def pairs_file(tmp_path: Path) -> Path:
    pairs = generate_noisy_pairs(24, seed=5, min_words=1, max_words=3)
    return write_jsonl(tmp_path / "pairs.jsonl", [p.to_record() for p in pairs])


@pytest.fixture
def checkpoint(tmp_path: Path, cli_json, run_config: Path, pairs_file: Path) -> Path:
    """A tiny trained checkpoint."""
    out = tmp_path / "model" / "run.cpte"
    out.parent.mkdir()
    cli_json("train", "--config", run_config, "--data", pairs_file, "--out", out)
    return out


@pytest.fixture
def retrieval_files(tmp_path: Path) -> tuple[Path, Path, Path]:
    """corpus.jsonl, queries.jsonl and qrels.tsv built from noisy-copy pairs."""
    pairs = generate_noisy_pairs(6, seed=9, min_words=1, max_words=2)
    corpus = write_jsonl(tmp_path / "corpus.jsonl", [{"id": f"d{i}", "text": p.y.decode()} for i, p in enumerate(pairs)])
    queries = write_jsonl(tmp_path / "queries.jsonl", [{"id": f"q{i}", "text": p.x.decode()} for i, p in enumerate(pairs)])
    qrels = tmp_path / "qrels.tsv"
    qrels.write_text("query_id\tdoc_id\trelevance\n" + "".join(f"q{i}\td{i}\t1\n" for i in range(len(pairs))))
    return corpus, queries, qrels
