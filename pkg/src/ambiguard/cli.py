"""Command-line interface.

Every subcommand reads stdin and writes stdout when file options are
omitted, so commands compose in shell pipelines. Runtime failures exit
nonzero with a single "error: <message>" line on stderr.
"""

from __future__ import annotations

import json
import sys
from typing import IO, NoReturn

import click

from .augment import augment_corpus
from .checkpoint import CheckpointError, load_checkpoint_file, save_checkpoint_file
from .classifier import TrainConfig, classify, train
from .config import ServiceConfig, config_from_file
from .core import DatasetError, Query, parse_dataset, serialize_dataset
from .embed import EmbedderError, HashingEmbedder
from .lexical import (
    DEFAULT_COMMON_WORDS,
    DEFAULT_ENTITY_TYPES,
    EntityTypeLexicon,
    Lexicons,
    load_word_list,
    mask_entities,
)
from .metrics import (
    classification_metrics,
    compare_frameworks,
    format_framework_table,
    framework_reports_to_obj,
)
from .rewrite import LLMServiceError, RewriteError

_FAILURES = (
    ValueError,
    DatasetError,
    CheckpointError,
    EmbedderError,
    LLMServiceError,
    RewriteError,
    OSError,
)


def _fail(message: str) -> NoReturn:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _lexicons(entity_types: str | None, common_words: str | None) -> Lexicons:
    ets = EntityTypeLexicon(load_word_list(entity_types)) if entity_types else DEFAULT_ENTITY_TYPES
    commons = load_word_list(common_words) if common_words else DEFAULT_COMMON_WORDS
    return Lexicons(entity_types=ets, common_words=commons)


def _query_lines(stream: IO[str]) -> list[str]:
    return [line.rstrip("\n") for line in stream if line.strip()]


_lexicon_options = [
    click.option("--entity-types", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="Entity-type word list, one word per line."),
    click.option("--common-words", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="Common hyphenated words exempt from masking."),
]


def _with(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@click.group()
@click.version_option(package_name="ambiguard")
def main() -> None:
    """Detect ambiguous conversational queries and rewrite only those."""


@main.command("mask")
@click.option("--input", "input_", type=click.File("r"), default="-", help="Queries, one per line.")
@click.option("--output", type=click.File("w"), default="-")
@_with(_lexicon_options)
def mask_cmd(input_: IO[str], output: IO[str], entity_types: str | None, common_words: str | None) -> None:
    """Mask entity-like tokens in queries (one per line) with ENTITY."""
    try:
        lexicons = _lexicons(entity_types, common_words)
        for line in _query_lines(input_):
            output.write(mask_entities(Query(line), lexicons.common_words).text + "\n")
    except _FAILURES as exc:
        _fail(str(exc))


@main.command("classify")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--input", "input_", type=click.File("r"), default="-", help="Queries, one per line.")
@click.option("--output", type=click.File("w"), default="-")
@_with(_lexicon_options)
def classify_cmd(
    checkpoint: str, input_: IO[str], output: IO[str],
    entity_types: str | None, common_words: str | None,
) -> None:
    """Classify queries (one per line); JSON verdict per line."""
    try:
        model = load_checkpoint_file(checkpoint)
        lexicons = _lexicons(entity_types, common_words)
        for line in _query_lines(input_):
            verdict = classify(model, Query(line), lexicons)
            output.write(json.dumps({
                "query": line,
                "label": verdict.label.value,
                "type": verdict.ambiguity_type.value,
                "score": verdict.score,
                "source": verdict.source.value,
            }, ensure_ascii=False) + "\n")
    except _FAILURES as exc:
        _fail(str(exc))


@main.command("train")
@click.option("--data", type=click.File("r"), required=True, help="Labeled training dataset (JSON lines).")
@click.option("--val", type=click.File("r"), required=True, help="Labeled validation dataset (JSON lines).")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Checkpoint output path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=3, show_default=True)
@click.option("--batch-size", type=int, default=4, show_default=True)
@click.option("--lr", type=float, default=2e-5, show_default=True)
@click.option("--eval-every", type=int, default=50, show_default=True)
@click.option("--hidden", type=int, default=384, show_default=True)
@click.option("--dim", type=int, default=768, show_default=True, help="Hashing embedder dimension.")
@click.option("--dropout", type=float, default=0.1, show_default=True)
@click.option("--threshold", type=float, default=0.5, show_default=True)
def train_cmd(
    data: IO[str], val: IO[str], out: str, seed: int, epochs: int, batch_size: int,
    lr: float, eval_every: int, hidden: int, dim: int, dropout: float, threshold: float,
) -> None:
    """Train the ambiguity classifier head and write a checkpoint."""
    try:
        train_records = parse_dataset(data)
        val_records = parse_dataset(val)
        cfg = TrainConfig(
            learning_rate=lr, batch_size=batch_size, epochs=epochs, eval_every=eval_every,
            seed=seed, dropout_p=dropout, hidden=hidden, threshold=threshold,
        )
        result = train(train_records, val_records, cfg, HashingEmbedder(dim=dim))
        save_checkpoint_file(result.model, out, cfg)
        best = max(result.evals, key=lambda p: (p.metric, -p.step))
        click.echo(json.dumps({
            "checkpoint": out,
            "best_step": result.best_step,
            "val_recall": best.recall,
            "val_f1": best.f1,
            "evaluations": len(result.evals),
        }))
    except _FAILURES as exc:
        _fail(str(exc))


@main.command("augment")
@click.option("--input", "input_", type=click.File("r"), default="-", help="Labeled dataset (JSON lines).")
@click.option("--output", type=click.File("w"), default="-")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--repetitions", type=int, default=5, show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Write per-rule generation counts to this JSON file.")
@click.option("--entity-types", type=click.Path(exists=True, dir_okay=False), default=None)
def augment_cmd(
    input_: IO[str], output: IO[str], seed: int, repetitions: int,
    report_path: str | None, entity_types: str | None,
) -> None:
    """Append rule-generated ambiguous records to a labeled dataset."""
    try:
        records = parse_dataset(input_)
        ets = EntityTypeLexicon(load_word_list(entity_types)) if entity_types else DEFAULT_ENTITY_TYPES
        generated, reports = augment_corpus(records, seed, repetitions=repetitions, entity_types=ets)
        output.write(serialize_dataset(records + generated))
        if report_path:
            counts: dict[str, int] = {}
            for rep in reports:
                counts[rep.rule.value] = counts.get(rep.rule.value, 0) + len(rep.generated)
            with open(report_path, "w", encoding="utf-8") as fh:
                json.dump({"generated": len(generated), "by_rule": counts, "seed": seed}, fh, indent=2)
                fh.write("\n")
    except _FAILURES as exc:
        _fail(str(exc))


@main.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", type=click.File("r"), required=True, help="Labeled dataset (JSON lines).")
@click.option("--output", type=click.File("w"), default="-")
@_with(_lexicon_options)
def eval_cmd(
    checkpoint: str, data: IO[str], output: IO[str],
    entity_types: str | None, common_words: str | None,
) -> None:
    """Classification metrics (ambiguous = positive class) on a labeled set."""
    try:
        model = load_checkpoint_file(checkpoint)
        lexicons = _lexicons(entity_types, common_words)
        records = parse_dataset(data)
        unlabeled = [r.id for r in records if r.label is None]
        if unlabeled:
            raise ValueError(f"records missing labels: {unlabeled[:5]}")
        preds = [classify(model, r.query, lexicons).label for r in records]
        gold = [r.label for r in records]
        report = classification_metrics(preds, gold)
        output.write(json.dumps({
            "precision": report.precision, "recall": report.recall,
            "f1": report.f1, "accuracy": report.accuracy,
            "tp": report.tp, "fp": report.fp, "tn": report.tn, "fn": report.fn,
            "n": len(records),
        }) + "\n")
    except _FAILURES as exc:
        _fail(str(exc))


@main.command("compare")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", type=click.File("r"), required=True,
              help="Dataset with golden_rewrite on every record (JSON lines).")
@click.option("--rewriter", "rewriter_kind", type=click.Choice(["mock", "llm"]), default="mock",
              show_default=True)
@click.option("--mock-table", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON object mapping query text to its rewrite (mock rewriter).")
@click.option("--llm-url", default=None)
@click.option("--llm-model", default=None)
@click.option("--json-out", type=click.Path(dir_okay=False), default=None,
              help="Write the machine-readable report here.")
@_with(_lexicon_options)
def compare_cmd(
    checkpoint: str, data: IO[str], rewriter_kind: str, mock_table: str | None,
    llm_url: str | None, llm_model: str | None, json_out: str | None,
    entity_types: str | None, common_words: str | None,
) -> None:
    """Compare no_rewrite / always_rewrite / guided against golden rewrites."""
    try:
        model = load_checkpoint_file(checkpoint)
        lexicons = _lexicons(entity_types, common_words)
        records = parse_dataset(data)
        cfg = ServiceConfig(
            checkpoint_path=checkpoint, rewriter_kind=rewriter_kind,
            mock_table_path=mock_table, llm_url=llm_url, llm_model=llm_model,
        )
        from .config import build_rewriter

        rewriter = build_rewriter(cfg)
        reports = compare_frameworks(records, model, rewriter, model.embedder, lexicons)
        click.echo(format_framework_table(reports))
        if json_out:
            with open(json_out, "w", encoding="utf-8") as fh:
                json.dump(framework_reports_to_obj(reports), fh, indent=2)
                fh.write("\n")
    except _FAILURES as exc:
        _fail(str(exc))


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON config file; other flags are ignored when given.")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--rewriter", "rewriter_kind", type=click.Choice(["mock", "llm"]), default="mock",
              show_default=True)
@click.option("--mock-table", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--llm-url", default=None)
@click.option("--llm-model", default=None)
@click.option("--history-window", type=int, default=5, show_default=True)
@click.option("--threshold", type=float, default=None)
@_with(_lexicon_options)
def serve_cmd(
    config_path: str | None, checkpoint: str | None, host: str, port: int,
    rewriter_kind: str, mock_table: str | None, llm_url: str | None, llm_model: str | None,
    history_window: int, threshold: float | None,
    entity_types: str | None, common_words: str | None,
) -> None:
    """Run the HTTP service (classify, process, healthz)."""
    try:
        if config_path:
            cfg = config_from_file(config_path)
        else:
            if not checkpoint:
                raise ValueError("either --config or --checkpoint is required")
            cfg = ServiceConfig(
                checkpoint_path=checkpoint, host=host, port=port,
                history_window=history_window, threshold=threshold,
                rewriter_kind=rewriter_kind, mock_table_path=mock_table,
                llm_url=llm_url, llm_model=llm_model,
                entity_types_path=entity_types, common_words_path=common_words,
            )
        from .service import serve

        serve(cfg)
    except _FAILURES as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()
