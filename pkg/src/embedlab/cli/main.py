"""
Main Typer CLI application for embedlab.

Subcommands:
- train, ablate-batch: contrastive training and the batch-size ablation
- embed, index, search: inference, index building and querying
- eval-retrieval, eval-probe, eval-knn, eval-zeroshot, eval-sts,
  eval-codesearch, track: evaluation protocols
- mine-pairs, synth-pairs: dataset utilities

Exit codes: 0 success, 1 usage or configuration error, 2 data/format error
(missing or malformed input, corrupt checkpoint, training divergence),
130 when interrupted.
"""

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Any

import click
import pandas as pd
import typer
from pydantic import ValidationError

from embedlab.config import ENV_CONFIG, METRICS_SUFFIX, RunConfig, apply_overrides, load_config
from embedlab.core import (
    EmbeddingModel,
    Side,
    embedding_manifest_path,
    load_checkpoint,
    save_checkpoint,
    write_csv,
    write_embeddings,
    write_jsonl,
)
from embedlab.data import (
    MiningStats,
    RetrievalSet,
    generate_noisy_pairs,
    load_labeled_texts,
    load_labels,
    load_pairs,
    load_retrieval_set,
    load_similarity_pairs,
    load_texts,
    mine_code_pairs,
    pairs_to_retrieval_set,
)
from embedlab.errors import ConfigError, DataError, EmbedLabError, FormatError, TrainingError
from embedlab.evaluation import (
    EvalSuite,
    ProbeSuite,
    RetrievalSuite,
    STSSuite,
    code_search_eval,
    embed_labeled,
    evaluate_retrieval,
    knn_accuracy,
    linear_probe,
    sentence_similarity_eval,
    track_checkpoints,
    zero_shot_accuracy,
)
from embedlab.index import IndexMode, VectorIndex
from embedlab.logging_config import setup_logging
from embedlab.training import batch_size_ablation, train

from .output import CommandResult, OutputFormatter

app = typer.Typer(
    name="embedlab",
    help="Contrastive text and code embeddings: train, embed, index, search and evaluate",
    no_args_is_help=True,
    add_completion=False,
)

logger = logging.getLogger(__name__)

# Shared options
ConfigOpt = Annotated[
    Path | None,
    typer.Option("--config", "-c", help=f"TOML run configuration (default: ${ENV_CONFIG}, else built-in defaults)"),
]
PrintConfigOpt = Annotated[bool, typer.Option("--print-config", help="Print the resolved configuration as JSON and exit")]
SeedOpt = Annotated[int | None, typer.Option("--seed", help="Random seed (overrides config)", min=0)]
CkptOpt = Annotated[Path, typer.Option("--ckpt", help="Model checkpoint (.cpte)")]
OutputFormatOpt = Annotated[str, typer.Option("--output-format", help="Output format: text or json")]
QuietOpt = Annotated[bool, typer.Option("--quiet", "-q", help="Only log errors; no progress bars")]
VerboseOpt = Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging")]


def _formatter(output_format: str, quiet: bool, verbose: bool) -> OutputFormatter:
    setup_logging(verbose=verbose, quiet=quiet)
    if output_format not in ("text", "json"):
        OutputFormatter("text").print_error(f"Invalid output format '{output_format}'. Must be 'text' or 'json'.")
        raise typer.Exit(1)
    if output_format == "text" and not sys.stdout.isatty():
        output_format = "json"
        logger.debug("Auto-detected non-TTY output, switching to JSON format")
    return OutputFormatter(output_format=output_format, quiet=quiet, verbose=verbose)


def _first_validation_error(e: ValidationError) -> str:
    first = e.errors()[0]
    where = ".".join(str(p) for p in first["loc"]) or "config"
    return f"{where}: {first['msg']}"


@contextmanager
def _command_errors(out: OutputFormatter, command: str) -> Iterator[None]:
    """Translate library exceptions into messages and exit codes."""
    try:
        yield
    except typer.Exit:
        raise
    except KeyboardInterrupt:
        out.print_error(f"{command} interrupted")
        raise typer.Exit(130) from None
    except ValidationError as e:
        out.print_error(
            f"Invalid configuration: {_first_validation_error(e)}",
            hint="Check the config file and flags; --print-config shows the resolved values",
        )
        raise typer.Exit(1) from None
    except ConfigError as e:
        out.print_error(str(e), hint=f"Pass the missing option or set it in the config file (${ENV_CONFIG})")
        raise typer.Exit(1) from None
    except FormatError as e:
        out.print_error(str(e), hint="The file is corrupt, truncated or from an incompatible version; regenerate it")
        raise typer.Exit(2) from None
    except DataError as e:
        out.print_error(str(e), hint="Check the input file path and its row format (see data/doc.md)")
        raise typer.Exit(2) from None
    except TrainingError as e:
        out.print_error(str(e), hint="Lower the learning rate or enable gradient clipping (train.grad_clip_norm)")
        raise typer.Exit(2) from None
    except EmbedLabError as e:
        out.print_error(str(e))
        raise typer.Exit(2) from None
    except FileNotFoundError as e:
        out.print_error(f"File not found: {e.filename}")
        raise typer.Exit(2) from None
    except Exception as e:
        logger.exception(f"Unexpected error during {command}")
        out.print_error(f"Unexpected error: {e}")
        raise typer.Exit(2) from None


def _resolve_config(config_path: Path | None, overrides: dict[str, Any], print_config: bool) -> RunConfig:
    config = apply_overrides(load_config(config_path), overrides)
    if print_config:
        typer.echo(config.to_json())
        raise typer.Exit(0)
    return config


def _pick_path(flag_value: Path | None, config_value: str | None, what: str, flag: str) -> Path:
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return Path(config_value)
    raise ConfigError(f"No {what} given: pass {flag} or set it in the [data] section of the config")


def _retrieval_set(
    config: RunConfig, corpus: Path | None, queries: Path | None, qrels: Path | None
) -> RetrievalSet:
    return load_retrieval_set(
        _pick_path(corpus, config.data.corpus, "retrieval corpus", "--corpus"),
        _pick_path(queries, config.data.queries, "retrieval queries", "--queries"),
        _pick_path(qrels, config.data.qrels, "relevance judgments", "--qrels"),
    )


def _metrics_path(out: Path) -> Path:
    return Path(f"{out.with_suffix('')}{METRICS_SUFFIX}")


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@app.command("train")
def train_command(
    out: Annotated[Path, typer.Option("--out", "-o", help="Checkpoint file to write")],
    data: Annotated[Path | None, typer.Option("--data", help="Training pairs JSONL (overrides data.train)")] = None,
    held_out: Annotated[
        Path | None, typer.Option("--held-out", help="Held-out pairs JSONL for MRR@10 tracking (overrides data.held_out)")
    ] = None,
    resume: Annotated[Path | None, typer.Option("--resume", help="Continue training from this checkpoint")] = None,
    init_from: Annotated[
        Path | None, typer.Option("--init-from", help="Warm-start weights and temperature from this checkpoint")
    ] = None,
    batch_size: Annotated[int | None, typer.Option("--batch-size", "-m", help="Pairs per batch", min=1)] = None,
    steps: Annotated[int | None, typer.Option("--steps", help="Total optimizer steps", min=1)] = None,
    learning_rate: Annotated[float | None, typer.Option("--lr", help="Peak learning rate")] = None,
    eval_every: Annotated[int | None, typer.Option("--eval-every", help="Held-out eval interval", min=0)] = None,
    checkpoint_every: Annotated[
        int | None, typer.Option("--checkpoint-every", help="Write step-XXXXXXXX.cpte next to --out every N steps", min=0)
    ] = None,
    seed: SeedOpt = None,
    config_file: ConfigOpt = None,
    print_config: PrintConfigOpt = False,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Train an encoder on (x, y) pairs with the symmetric in-batch contrastive loss.

    \b
    Writes the checkpoint to --out and the per-step metrics log
    (step, loss, exp_tau, grad_norm) to <out>.metrics.csv.

    \b
    EXAMPLES:
        embedlab train --config run.toml --data pairs.jsonl --out run.cpte
        embedlab train --data pairs.jsonl --out run.cpte --batch-size 64 --steps 2000
        embedlab train --data pairs.jsonl --out run.cpte --resume run-old.cpte
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "train"):
        if resume is not None and init_from is not None:
            raise ConfigError("--resume and --init-from are mutually exclusive")
        config = _resolve_config(
            config_file,
            {
                "train.batch_size": batch_size,
                "train.total_steps": steps,
                "train.learning_rate": learning_rate,
                "train.eval_every": eval_every,
                "train.checkpoint_every": checkpoint_every,
                "train.seed": seed,
                "train.init_from": str(init_from) if init_from else None,
            },
            print_config,
        )
        pairs = load_pairs(_pick_path(data, config.data.train, "training data", "--data"))
        held_out_path = held_out if held_out is not None else config.data.held_out
        held_out_set = pairs_to_retrieval_set(load_pairs(Path(held_out_path))) if held_out_path else None
        resume_ckpt = load_checkpoint(resume) if resume is not None else None

        out_fmt.print_progress(f"Training on {len(pairs)} pairs", style="cyan")
        result = train(
            config.train,
            pairs,
            held_out=held_out_set,
            resume_from=resume_ckpt,
            checkpoint_dir=out.parent,
            progress=not quiet,
        )
        save_checkpoint(result.checkpoint, out)
        metrics_path = write_csv(_metrics_path(out), result.metrics)

        metrics = {"final_loss": result.final_loss, "exp_tau": result.checkpoint.exp_tau}
        if held_out_set is not None and not result.metrics.empty:
            metrics["eval_mrr@10"] = float(result.metrics["eval_mrr@10"].dropna().iloc[-1])
        out_fmt.print_result(
            CommandResult(
                command="train",
                outputs={"checkpoint": str(out), "metrics": str(metrics_path)},
                metrics=metrics,
                details={"steps": result.checkpoint.step, "periodic_checkpoints": len(result.checkpoint_paths)},
            )
        )


@app.command("ablate-batch")
def ablate_batch_command(
    batch_sizes: Annotated[str, typer.Option("--batch-sizes", help="Comma-separated batch sizes, e.g. 4,64")],
    data: Annotated[Path | None, typer.Option("--data", help="Training pairs JSONL (overrides data.train)")] = None,
    held_out: Annotated[
        Path | None, typer.Option("--held-out", help="Held-out pairs JSONL (overrides data.held_out)")
    ] = None,
    total_pairs: Annotated[
        int | None, typer.Option("--total-pairs", help="Pairs seen per run (default: steps * batch_size)", min=1)
    ] = None,
    out: Annotated[Path | None, typer.Option("--out", "-o", help="Write the results table as CSV")] = None,
    seed: SeedOpt = None,
    config_file: ConfigOpt = None,
    print_config: PrintConfigOpt = False,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Train once per batch size at an equal budget of pairs and compare held-out retrieval.

    \b
    EXAMPLE:
        embedlab ablate-batch --data train.jsonl --held-out dev.jsonl --batch-sizes 4,64 --total-pairs 8192
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "ablate-batch"):
        try:
            sizes = [int(s) for s in batch_sizes.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"--batch-sizes must be comma-separated integers, got {batch_sizes!r}") from None
        config = _resolve_config(config_file, {"train.seed": seed}, print_config)
        pairs = load_pairs(_pick_path(data, config.data.train, "training data", "--data"))
        held_out_pairs = load_pairs(_pick_path(held_out, config.data.held_out, "held-out pairs", "--held-out"))

        table = batch_size_ablation(
            config.train,
            pairs,
            sizes,
            pairs_to_retrieval_set(held_out_pairs),
            total_pairs=total_pairs,
            index_config=config.index,
            progress=not quiet,
        )
        if out is not None:
            write_csv(out, table)
        out_fmt.print_table("Batch-size ablation", table)


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


@app.command("embed")
def embed_command(
    ckpt: CkptOpt,
    input_path: Annotated[Path, typer.Option("--in", help="Texts JSONL with id and text fields")],
    out: Annotated[Path, typer.Option("--out", "-o", help="Embedding file (.f32); manifest goes to <out>.json")],
    side: Annotated[Side, typer.Option("--side", help="Encode as queries (x) or documents (y)")] = Side.X,
    batch_size: Annotated[int, typer.Option("--batch-size", help="Sequences per forward pass", min=1)] = 64,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Embed texts into an N x d little-endian float32 matrix with a JSON manifest.

    \b
    EXAMPLE:
        embedlab embed --ckpt run.cpte --in texts.jsonl --side x --out emb.f32
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "embed"):
        model = EmbeddingModel.from_checkpoint(ckpt)
        texts = load_texts(input_path)
        ids = list(texts)
        matrix = model.embed_texts([texts[i] for i in ids], side, batch_size=batch_size, progress=not quiet)
        write_embeddings(out, matrix, ids, {"side": side.value, "checkpoint": str(ckpt), "step": model.step})
        out_fmt.print_result(
            CommandResult(
                command="embed",
                outputs={"embeddings": str(out), "manifest": str(embedding_manifest_path(out))},
                details={"rows": matrix.shape[0], "dim": matrix.shape[1], "side": side.value},
            )
        )


@app.command("index")
def index_command(
    ckpt: CkptOpt,
    out: Annotated[Path, typer.Option("--out", "-o", help="Index file to write (.cpti)")],
    corpus: Annotated[Path | None, typer.Option("--corpus", help="Corpus JSONL (overrides data.corpus)")] = None,
    mode: Annotated[IndexMode | None, typer.Option("--mode", help="flat (exact) or graph (approximate)")] = None,
    degree: Annotated[int | None, typer.Option("--degree", help="Graph neighbors per node", min=2)] = None,
    beam: Annotated[int | None, typer.Option("--beam", help="Graph beam width", min=1)] = None,
    seed: SeedOpt = None,
    config_file: ConfigOpt = None,
    print_config: PrintConfigOpt = False,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Embed a corpus on the document side and build a vector index over it.

    \b
    EXAMPLE:
        embedlab index --ckpt run.cpte --corpus corpus.jsonl --mode graph --out corpus.cpti
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "index"):
        config = _resolve_config(
            config_file,
            {
                "index.mode": mode.value if mode else None,
                "index.degree": degree,
                "index.beam": beam,
                "index.seed": seed,
            },
            print_config,
        )
        model = EmbeddingModel.from_checkpoint(ckpt)
        docs = load_texts(_pick_path(corpus, config.data.corpus, "corpus", "--corpus"))
        ids = list(docs)
        vectors = model.embed_texts([docs[i] for i in ids], Side.Y, progress=not quiet)
        index = VectorIndex.build(
            ids,
            vectors,
            mode=config.index.mode,
            degree=config.index.degree,
            beam=config.index.beam,
            seed=config.index.seed,
            source=str(ckpt),
            progress=not quiet,
        )
        index.save(out)
        out_fmt.print_result(
            CommandResult(
                command="index",
                outputs={"index": str(out)},
                details={"vectors": len(index), "dim": index.dim, "mode": index.mode.value},
            )
        )


@app.command("search")
def search_command(
    index_path: Annotated[Path, typer.Option("--index", help="Index file (.cpti)")],
    query: Annotated[str, typer.Option("--query", help="Query text")],
    k: Annotated[int, typer.Option("--k", help="Number of results", min=1)] = 10,
    ckpt: Annotated[
        Path | None, typer.Option("--ckpt", help="Checkpoint for embedding the query (default: the index's)")
    ] = None,
    side: Annotated[Side, typer.Option("--side", help="Side to encode the query on")] = Side.X,
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Print the top-k documents for a query as "id<TAB>score" lines, best first.

    \b
    EXAMPLE:
        embedlab search --index corpus.cpti --query "sort a list in place" --k 10
    """
    out_fmt = _formatter("text", quiet, verbose)
    with _command_errors(out_fmt, "search"):
        index = VectorIndex.load(index_path)
        model_path = ckpt if ckpt is not None else (Path(index.source) if index.source else None)
        if model_path is None:
            raise ConfigError("The index does not record its checkpoint; pass --ckpt")
        model = EmbeddingModel.from_checkpoint(model_path)
        if model.config.d_model != index.dim:
            raise ConfigError(f"Checkpoint dim {model.config.d_model} does not match index dim {index.dim}")
        vector = model.embed_texts([query], side)[0]
        for hit in index.search(vector, k):
            typer.echo(f"{hit.id}\t{hit.score:.6f}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@app.command("eval-retrieval")
def eval_retrieval_command(
    ckpt: CkptOpt,
    corpus: Annotated[Path | None, typer.Option("--corpus", help="Corpus JSONL (overrides data.corpus)")] = None,
    queries: Annotated[Path | None, typer.Option("--queries", help="Queries JSONL (overrides data.queries)")] = None,
    qrels: Annotated[Path | None, typer.Option("--qrels", help="Relevance TSV (overrides data.qrels)")] = None,
    ks: Annotated[list[int] | None, typer.Option("--k", help="Cutoff; repeat for several (default 1,10,20,100)")] = None,
    mode: Annotated[IndexMode | None, typer.Option("--mode", help="flat (exact) or graph (approximate)")] = None,
    empty_qrels: Annotated[
        str | None, typer.Option("--empty-qrels", help="Queries without relevant docs: skip or zero")
    ] = None,
    out: Annotated[Path | None, typer.Option("--out", "-o", help="Write metrics as CSV")] = None,
    config_file: ConfigOpt = None,
    print_config: PrintConfigOpt = False,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    MRR@k, Recall@k and nDCG@k on a corpus / queries / qrels benchmark.

    \b
    EXAMPLE:
        embedlab eval-retrieval --ckpt run.cpte --corpus corpus.jsonl --queries queries.jsonl --qrels qrels.tsv --k 10
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "eval-retrieval"):
        config = _resolve_config(
            config_file,
            {"eval.ks": ks or None, "index.mode": mode.value if mode else None, "eval.empty_qrels": empty_qrels},
            print_config,
        )
        model = EmbeddingModel.from_checkpoint(ckpt)
        dataset = _retrieval_set(config, corpus, queries, qrels)
        metrics = evaluate_retrieval(model, dataset, config.index, config.eval, progress=not quiet)
        outputs = {}
        if out is not None:
            write_csv(out, pd.DataFrame([{"metric": k, "value": v} for k, v in metrics.items()]))
            outputs["metrics"] = str(out)
        out_fmt.print_result(CommandResult(command="eval-retrieval", outputs=outputs, metrics=metrics))


@app.command("eval-probe")
def eval_probe_command(
    ckpt: CkptOpt,
    train_path: Annotated[Path, typer.Option("--train", help="Labeled texts JSONL for fitting")],
    test_path: Annotated[Path, typer.Option("--test", help="Labeled texts JSONL for scoring")],
    l2: Annotated[float | None, typer.Option("--l2", help="L2 penalty")] = None,
    steps: Annotated[int | None, typer.Option("--steps", help="Gradient steps", min=1)] = None,
    learning_rate: Annotated[float | None, typer.Option("--lr", help="Step size")] = None,
    config_file: ConfigOpt = None,
    print_config: PrintConfigOpt = False,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Linear-probe accuracy: logistic regression on frozen x-side embeddings.

    \b
    EXAMPLE:
        embedlab eval-probe --ckpt run.cpte --train sst2-train.jsonl --test sst2-test.jsonl
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "eval-probe"):
        config = _resolve_config(
            config_file,
            {"eval.probe_l2": l2, "eval.probe_steps": steps, "eval.probe_lr": learning_rate},
            print_config,
        )
        model = EmbeddingModel.from_checkpoint(ckpt)
        train_rows = [(r.text, r.label) for r in load_labeled_texts(train_path)]
        test_rows = [(r.text, r.label) for r in load_labeled_texts(test_path)]
        accuracy = linear_probe(
            embed_labeled(train_rows, model, progress=not quiet),
            embed_labeled(test_rows, model, progress=not quiet),
            l2=config.eval.probe_l2,
            steps=config.eval.probe_steps,
            lr=config.eval.probe_lr,
        )
        out_fmt.print_result(CommandResult(command="eval-probe", metrics={"accuracy": accuracy}))


@app.command("eval-knn")
def eval_knn_command(
    ckpt: CkptOpt,
    train_path: Annotated[Path, typer.Option("--train", help="Labeled texts JSONL (neighbors)")],
    test_path: Annotated[Path, typer.Option("--test", help="Labeled texts JSONL to classify")],
    k: Annotated[int | None, typer.Option("--k", help="Neighbors per vote (default 256)", min=1)] = None,
    config_file: ConfigOpt = None,
    print_config: PrintConfigOpt = False,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    k-NN accuracy: majority label among the k most similar training texts.

    k is clamped to the training-set size.
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "eval-knn"):
        config = _resolve_config(config_file, {"eval.knn_k": k}, print_config)
        model = EmbeddingModel.from_checkpoint(ckpt)
        train_items = embed_labeled([(r.text, r.label) for r in load_labeled_texts(train_path)], model)
        test_items = embed_labeled([(r.text, r.label) for r in load_labeled_texts(test_path)], model)
        k_used = config.eval.knn_k
        if k_used > len(train_items):
            logger.warning(f"k={k_used} exceeds the {len(train_items)} training examples; using k={len(train_items)}")
            k_used = len(train_items)
        accuracy = knn_accuracy(train_items, test_items, k=k_used)
        out_fmt.print_result(CommandResult(command="eval-knn", metrics={"accuracy": accuracy}, details={"k": k_used}))


@app.command("eval-zeroshot")
def eval_zeroshot_command(
    ckpt: CkptOpt,
    labels_path: Annotated[Path, typer.Option("--labels", help="Labels JSONL with label and optional description")],
    test_path: Annotated[Path, typer.Option("--test", help="Labeled texts JSONL to classify")],
    template: Annotated[
        str | None,
        typer.Option("--template", help='Prompt with one {label} slot, e.g. "this is an example of a {label} movie review."'),
    ] = None,
    label_side: Annotated[Side, typer.Option("--label-side", help="Side to encode label descriptions on")] = Side.Y,
    config_file: ConfigOpt = None,
    print_config: PrintConfigOpt = False,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Zero-shot accuracy: each text gets the label whose description embeds closest.
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "eval-zeroshot"):
        config = _resolve_config(config_file, {"eval.zero_shot_template": template}, print_config)
        model = EmbeddingModel.from_checkpoint(ckpt)
        labels = [(r.label, r.text) for r in load_labels(labels_path)]
        examples = [(r.text, r.label) for r in load_labeled_texts(test_path)]
        accuracy = zero_shot_accuracy(
            labels, examples, model, template=config.eval.zero_shot_template, label_side=label_side, progress=not quiet
        )
        out_fmt.print_result(CommandResult(command="eval-zeroshot", metrics={"accuracy": accuracy}))


@app.command("eval-sts")
def eval_sts_command(
    ckpt: CkptOpt,
    pairs_path: Annotated[Path, typer.Option("--pairs", help="Similarity JSONL with a, b and score fields")],
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Spearman correlation between embedding cosine and gold sentence similarity.
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "eval-sts"):
        model = EmbeddingModel.from_checkpoint(ckpt)
        pairs = [(r.a, r.b, r.score) for r in load_similarity_pairs(pairs_path)]
        rho = sentence_similarity_eval(pairs, model)
        out_fmt.print_result(CommandResult(command="eval-sts", metrics={"spearman": rho}))


@app.command("eval-codesearch")
def eval_codesearch_command(
    ckpt: CkptOpt,
    pairs_path: Annotated[Path, typer.Option("--pairs", help="Pairs JSONL (x = docstring, y = code), e.g. from mine-pairs")],
    pool_size: Annotated[int | None, typer.Option("--pool-size", help="Candidates per pool (1000 or 10000)", min=2)] = None,
    seed: SeedOpt = None,
    config_file: ConfigOpt = None,
    print_config: PrintConfigOpt = False,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Code search MRR: find each function's code from its docstring within a candidate pool.
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "eval-codesearch"):
        config = _resolve_config(config_file, {"eval.code_search_pool": pool_size, "train.seed": seed}, print_config)
        model = EmbeddingModel.from_checkpoint(ckpt)
        pairs = [(p.x, p.y) for p in load_pairs(pairs_path)]
        mrr = code_search_eval(model, pairs, pool_size=config.eval.code_search_pool, seed=config.train.seed)
        out_fmt.print_result(
            CommandResult(command="eval-codesearch", metrics={"mrr": mrr}, details={"pairs": len(pairs)})
        )


@app.command("track")
def track_command(
    checkpoints: Annotated[list[Path], typer.Argument(help="Checkpoints from one run (at least two)")],
    retrieval: Annotated[bool, typer.Option("--retrieval", help="Run the retrieval suite (needs corpus/queries/qrels)")] = False,
    corpus: Annotated[Path | None, typer.Option("--corpus", help="Corpus JSONL (overrides data.corpus)")] = None,
    queries: Annotated[Path | None, typer.Option("--queries", help="Queries JSONL (overrides data.queries)")] = None,
    qrels: Annotated[Path | None, typer.Option("--qrels", help="Relevance TSV (overrides data.qrels)")] = None,
    sts: Annotated[Path | None, typer.Option("--sts", help="Similarity JSONL for the sentence-similarity suite")] = None,
    probe_train: Annotated[Path | None, typer.Option("--probe-train", help="Labeled JSONL to fit the probe")] = None,
    probe_test: Annotated[Path | None, typer.Option("--probe-test", help="Labeled JSONL to score the probe")] = None,
    out: Annotated[Path | None, typer.Option("--out", "-o", help="Write the time series as CSV")] = None,
    config_file: ConfigOpt = None,
    print_config: PrintConfigOpt = False,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Evaluate a series of checkpoints and report each suite's metrics by training step.

    The table has one (step, suite, checkpoint, metric, value) row per result.

    \b
    EXAMPLE:
        embedlab track runs/step-*.cpte --sts sts-dev.jsonl --out tracking.csv
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "track"):
        config = _resolve_config(config_file, {}, print_config)
        if (probe_train is None) != (probe_test is None):
            raise ConfigError("--probe-train and --probe-test must be given together")
        suites: list[EvalSuite] = []
        if retrieval:
            suites.append(RetrievalSuite(_retrieval_set(config, corpus, queries, qrels), config.index, config.eval))
        if sts is not None:
            suites.append(STSSuite([(r.a, r.b, r.score) for r in load_similarity_pairs(sts)]))
        if probe_train is not None and probe_test is not None:
            suites.append(
                ProbeSuite(
                    [(r.text, r.label) for r in load_labeled_texts(probe_train)],
                    [(r.text, r.label) for r in load_labeled_texts(probe_test)],
                    config.eval,
                )
            )
        if not suites:
            raise ConfigError("No evaluation suite selected: use --retrieval, --sts or --probe-train/--probe-test")

        table = track_checkpoints(checkpoints, suites)
        if out is not None:
            write_csv(out, table)
        out_fmt.print_table("Checkpoint tracking", table)


# ---------------------------------------------------------------------------
# Data utilities
# ---------------------------------------------------------------------------


@app.command("mine-pairs")
def mine_pairs_command(
    sources: Annotated[list[Path], typer.Argument(help="Source files or directories (.py, .js)")],
    out: Annotated[Path, typer.Option("--out", "-o", help="Pairs JSONL to write")],
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Extract (docstring, code) pairs from top-level documented functions.

    \b
    The output is a training-pair JSONL (x = docstring, y = code).

    \b
    EXAMPLE:
        embedlab mine-pairs src/ lib/utils.js --out code-pairs.jsonl
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "mine-pairs"):
        stats = MiningStats()
        rows = [pair.to_record() for pair in mine_code_pairs(sources, stats)]
        write_jsonl(out, rows)
        out_fmt.print_result(
            CommandResult(
                command="mine-pairs",
                outputs={"pairs": str(out)},
                details={
                    "files_scanned": stats.files_scanned,
                    "files_skipped": stats.files_skipped,
                    "pairs": stats.pairs_emitted,
                },
            )
        )


@app.command("synth-pairs")
def synth_pairs_command(
    out: Annotated[Path, typer.Option("--out", "-o", help="Pairs JSONL to write")],
    n: Annotated[int, typer.Option("--n", help="Number of pairs", min=1)] = 2000,
    noise_rate: Annotated[float, typer.Option("--noise-rate", help="Character noise probability", min=0.0, max=0.99)] = 0.1,
    seed: Annotated[int, typer.Option("--seed", help="Random seed", min=0)] = 0,
    output_format: OutputFormatOpt = "text",
    quiet: QuietOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """
    Generate noisy-copy pairs (y = x with character noise) for smoke tests and ablations.
    """
    out_fmt = _formatter(output_format, quiet, verbose)
    with _command_errors(out_fmt, "synth-pairs"):
        pairs = generate_noisy_pairs(n, seed=seed, noise_rate=noise_rate)
        write_jsonl(out, [p.to_record() for p in pairs])
        out_fmt.print_result(CommandResult(command="synth-pairs", outputs={"pairs": str(out)}, details={"pairs": n}))


def run(argv: list[str] | None = None) -> int:
    """
    Invoke the CLI and return its exit code.

    Click usage errors (unknown flag, missing option, bad choice) map to 1.
    """
    try:
        rc = app(args=argv, standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 1
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 130
    return rc if isinstance(rc, int) else 0


def main() -> None:
    """Console-script entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
