"""Command-line entry point.

Every failure path emits exactly one JSON object on stderr (kind, message,
and any structured fields) and exits nonzero; results go to stdout as JSON
followed by an aligned-text rendering where one exists.
"""
from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import tfidf as tfidf_mod
from .corpus import load_dataset, stats_table, summarize
from .errors import EmbaggError
from .experiment import (
    collect_reports,
    load_experiment_config,
    rank_reports,
    run_cross_eval,
    run_experiment,
)
from .linear import TrainConfig, load_head, save_head, train_head
from .metrics import average_rank, evaluate_head
from .pooling import aggregate_batch, as_strategy, output_dim
from .store import StoreWriter, inspect_store, open_store
from .toy_encoder import ToyEncoderConfig, build_toy_store

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


def _fail(kind: str, message: str, **extra) -> None:
    payload = {"error": kind, "message": message, **extra}
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    sys.exit(1)


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except EmbaggError as exc:
            extra = {}
            for attr in ("line", "split", "doc_id", "path"):
                if hasattr(exc, attr):
                    extra[attr] = getattr(exc, attr)
            _fail(type(exc).__name__, str(exc), **extra)
        except FileNotFoundError as exc:
            _fail("NotFound", str(exc))
        except (ValueError, KeyError, OSError) as exc:
            _fail(type(exc).__name__, str(exc))

    return wrapper


def _emit(obj: dict, text: str | None = None) -> None:
    click.echo(json.dumps(obj, sort_keys=True))
    if text:
        click.echo(text)


@click.group()
def main() -> None:
    """Sentiment classification over pooled token embeddings and TF-IDF."""


@main.command()
@click.argument("dataset_dir", type=click.Path())
@click.option("--name", default=None, help="Dataset name (defaults to the directory name).")
@_handle_errors
def stats(dataset_dir: str, name: str | None) -> None:
    """Print a summary row (sizes, lengths, vocabulary, class balance)."""
    dataset = load_dataset(dataset_dir, name or Path(dataset_dir).name)
    row = summarize(dataset)
    _emit(row.to_dict(), stats_table([row]))


@main.command("fit-tfidf")
@click.argument("dataset_dir", type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Vocabulary TSV output path.")
@click.option("--min-df", default=1, show_default=True, help="Minimum document frequency.")
@_handle_errors
def fit_tfidf(dataset_dir: str, out: str, min_df: int) -> None:
    """Fit the 1-gram vocabulary on the training split and save it."""
    dataset = load_dataset(dataset_dir, Path(dataset_dir).name)
    vocab = tfidf_mod.fit_vocabulary(list(dataset.train), min_df=min_df)
    tfidf_mod.save_vocabulary(vocab, out)
    _emit({"vocab_size": vocab.size, "n_docs": vocab.n_docs, "out": out})


@main.group()
def store() -> None:
    """Embedding-store utilities."""


@store.command("inspect")
@click.argument("path", type=click.Path())
@_handle_errors
def store_inspect(path: str) -> None:
    """Validate a store file and print its header."""
    info = inspect_store(path)
    lines = [f"{k:>12}  {info[k]}" for k in ("precision", "positions", "hidden_size", "count", "model_tag")]
    if info["warnings"]:
        lines += [f"{'warning':>12}  {w}" for w in info["warnings"]]
    _emit(info, "\n".join(lines))


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path(), help="Input token-embedding store.")
@click.option("--strategy", required=True, help="Aggregation strategy (kebab-case name).")
@click.option("--out", required=True, type=click.Path(), help="Output embeddings file (store with T=1).")
@click.option("--ids", "ids_file", default=None, type=click.Path(), help="Optional file of doc ids, one per line.")
@_handle_errors
def aggregate(store_path: str, strategy: str, out: str, ids_file: str | None) -> None:
    """Pool every document of a store into fixed-size embeddings."""
    strat = as_strategy(strategy)
    with open_store(store_path) as src:
        doc_ids = src.doc_ids
        if ids_file is not None:
            doc_ids = [line.strip() for line in Path(ids_file).read_text(encoding="utf-8").splitlines() if line.strip()]
        dim = output_dim(strat, src.hidden_size)
        embeddings = aggregate_batch(src, doc_ids, strat)
        with StoreWriter(
            out,
            doc_ids,
            positions=1,
            hidden_size=dim,
            precision=src.precision,
            model_tag=f"{src.model_tag}|{strat.value}",
        ) as writer:
            for emb in embeddings:
                writer.append(emb.data.reshape(1, dim))
        clamped = writer.clamped
    payload = {"out": out, "count": len(doc_ids), "dim": dim, "strategy": strat.value, "clamped": clamped}
    _emit(payload)


@main.command("toy-store")
@click.option("--dataset-dir", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--hidden-size", default=16, show_default=True)
@click.option("--positions", default=60, show_default=True)
@click.option("--precision", default="f32", type=click.Choice(["f32", "f16"]), show_default=True)
@_handle_errors
def toy_store(dataset_dir: str, out: str, seed: int, hidden_size: int, positions: int, precision: str) -> None:
    """Encode a dataset with the deterministic toy encoder into a store file."""
    dataset = load_dataset(dataset_dir, Path(dataset_dir).name)
    config = ToyEncoderConfig(seed=seed, hidden_size=hidden_size, positions=positions)
    count = build_toy_store(dataset, config, out, precision=precision)
    _emit({"out": out, "count": count, "hidden_size": hidden_size, "positions": positions})


def _load_train_config(path: str, seed_default: int = 0) -> TrainConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    table = raw.get("train", raw)
    table.setdefault("seed", seed_default)
    return TrainConfig(**table)


def _aggregated_features(agg_store_path: str, doc_ids: list[str]) -> np.ndarray:
    with open_store(agg_store_path) as src:
        if src.positions != 1:
            raise ValueError(f"{agg_store_path}: expected an aggregated store (positions=1), got positions={src.positions}")
        return np.vstack([src.get(doc_id).data[0].astype(np.float64) for doc_id in doc_ids])


@main.command("train-head")
@click.option("--input", "input_kind", required=True, type=click.Choice(["tfidf", "embeddings"]))
@click.option("--dataset-dir", required=True, type=click.Path())
@click.option("--config", "config_path", required=True, type=click.Path(), help="TOML file of training fields.")
@click.option("--features", default=None, type=click.Path(), help="Aggregated embeddings file (embeddings input).")
@click.option("--vocab", default=None, type=click.Path(), help="Existing vocabulary TSV (tfidf input; else fit on train).")
@click.option("--out", required=True, type=click.Path(), help="Output head file.")
@click.option("--log", "log_path", default=None, type=click.Path(), help="Training log (JSON lines).")
@_handle_errors
def train_head_cmd(input_kind, dataset_dir, config_path, features, vocab, out, log_path) -> None:
    """Train the logistic head on TF-IDF or aggregated-embedding features."""
    dataset = load_dataset(dataset_dir, Path(dataset_dir).name)
    config = _load_train_config(config_path)
    y_train = np.array([d.label for d in dataset.train])
    y_valid = np.array([d.label for d in dataset.valid])
    if input_kind == "tfidf":
        vocabulary = (
            tfidf_mod.load_vocabulary(vocab) if vocab else tfidf_mod.fit_vocabulary(list(dataset.train))
        )
        X_train = tfidf_mod.transform_many(list(dataset.train), vocabulary)
        X_valid = tfidf_mod.transform_many(list(dataset.valid), vocabulary)
        tag = "tfidf"
    else:
        if not features:
            raise ValueError("--features is required for embeddings input")
        X_train = _aggregated_features(features, [d.id for d in dataset.train])
        X_valid = _aggregated_features(features, [d.id for d in dataset.valid])
        tag = f"embedding:{Path(features).name}"
    result = train_head(X_train, y_train, config, valid=(X_valid, y_valid), trained_on=dataset.name, input_kind=tag)
    save_head(result.head, out)
    if log_path:
        with open(log_path, "w", encoding="utf-8") as fh:
            for entry in result.log:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    _emit({"out": out, "best_epoch": result.best_epoch, "log": result.log})


@main.command()
@click.option("--head", "head_path", required=True, type=click.Path())
@click.option("--input", "input_kind", required=True, type=click.Choice(["tfidf", "embeddings"]))
@click.option("--dataset-dir", required=True, type=click.Path())
@click.option("--features", default=None, type=click.Path(), help="Aggregated embeddings file (embeddings input).")
@click.option("--vocab", default=None, type=click.Path(), help="Vocabulary TSV (tfidf input).")
@click.option("--split", default="test", type=click.Choice(["train", "valid", "test"]), show_default=True)
@_handle_errors
def evaluate(head_path, input_kind, dataset_dir, features, vocab, split) -> None:
    """Score a saved head on one dataset split (ROC-AUC and log-loss)."""
    dataset = load_dataset(dataset_dir, Path(dataset_dir).name)
    docs = dataset.split(split)
    y = np.array([d.label for d in docs])
    head = load_head(head_path)
    if input_kind == "tfidf":
        if not vocab:
            raise ValueError("--vocab is required for tfidf input")
        X = tfidf_mod.transform_many(list(docs), tfidf_mod.load_vocabulary(vocab))
    else:
        if not features:
            raise ValueError("--features is required for embeddings input")
        X = _aggregated_features(features, [d.id for d in docs])
    report = evaluate_head(head, X, y, dataset=dataset.name, model=head.input_kind or input_kind)
    _emit(report.to_dict())


@main.command()
@click.option("--matrix", "matrix_csv", default=None, type=click.Path(), help="CSV: label column then one column per dataset.")
@click.option("--reports", "reports_dir", default=None, type=click.Path(), help="Experiment output directory to collect.")
@_handle_errors
def rank(matrix_csv, reports_dir) -> None:
    """Build an average-ranking table from a metric matrix or collected reports."""
    if (matrix_csv is None) == (reports_dir is None):
        raise ValueError("pass exactly one of --matrix or --reports")
    if matrix_csv is not None:
        with open(matrix_csv, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise ValueError("matrix CSV needs a header row and at least one data row")
        datasets = rows[0][1:]
        labels = [r[0] for r in rows[1:]]
        values = [[float(v) for v in r[1:]] for r in rows[1:]]
        table = average_rank(values, labels, datasets)
    else:
        table = rank_reports(collect_reports(reports_dir))
    _emit(table.to_dict(), table.to_text())


@main.command("cross-eval")
@click.option("--config", "config_path", required=True, type=click.Path())
@_handle_errors
def cross_eval(config_path) -> None:
    """Evaluate heads across datasets per a TOML config; prints the matrix."""
    matrix = run_cross_eval(config_path)
    _emit(matrix.to_dict(), matrix.to_text())


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@_handle_errors
def run(config_path) -> None:
    """Run one config-driven experiment end to end and print its report."""
    config = load_experiment_config(config_path)
    report = run_experiment(config)
    _emit(report.to_dict())


if __name__ == "__main__":
    main()
