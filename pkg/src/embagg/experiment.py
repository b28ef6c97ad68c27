"""Config-driven experiment runs: dataset -> features -> head -> report.

Configs are TOML files (see docs/cli.md for the schema).  Artifacts land
under ``<out_dir>/<dataset>/<representation>/`` so the ranking and
cross-evaluation collectors can discover them, and identical config + inputs
always produce byte-identical artifacts (reports carry no timestamps).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import tfidf as tfidf_mod
from .corpus import LabeledDataset, load_dataset
from .errors import EmbaggError, EmptyInput, ShapeError
from .linear import LinearHead, TrainConfig, load_head, save_head, train_head
from .metrics import CrossMatrix, EvalReport, RankingTable, average_rank, cross_matrix, evaluate_head
from .pooling import aggregate_batch, as_strategy, embedding_matrix
from .store import open_store

_TRAIN_KEYS = {"base_lr", "dropout", "weight_decay", "max_epochs", "batch_size", "seed", "l2"}


@dataclass(frozen=True)
class Representation:
    kind: str  # "tfidf" | "embedding"
    store: str = ""
    strategy: str = ""
    min_df: int = 1
    sublinear_tf: bool = False

    @property
    def label(self) -> str:
        return "tfidf" if self.kind == "tfidf" else self.strategy


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    out_dir: str
    dataset_path: str
    dataset_name: str
    representation: Representation
    train: TrainConfig


def _train_config(table: dict, seed: int) -> TrainConfig:
    unknown = set(table) - _TRAIN_KEYS
    if unknown:
        raise ValueError(f"unknown [train] keys: {sorted(unknown)}")
    table = dict(table)
    table.setdefault("seed", seed)
    return TrainConfig(**table)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    base = Path(path).parent
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    rep_raw = raw.get("representation", {})
    kind = rep_raw.get("kind", "")
    if kind not in ("tfidf", "embedding"):
        raise ValueError(f"representation.kind must be 'tfidf' or 'embedding', got {kind!r}")
    if kind == "embedding":
        if not rep_raw.get("store") or not rep_raw.get("strategy"):
            raise ValueError("embedding representation needs 'store' and 'strategy'")
        as_strategy(rep_raw["strategy"])  # fail fast on bad names
    rep = Representation(
        kind=kind,
        store=str(base / rep_raw["store"]) if rep_raw.get("store") else "",
        strategy=rep_raw.get("strategy", ""),
        min_df=int(rep_raw.get("min_df", 1)),
        sublinear_tf=bool(rep_raw.get("sublinear_tf", False)),
    )
    seed = int(raw.get("seed", 0))
    ds = raw.get("dataset", {})
    if "path" not in ds:
        raise ValueError("config needs a [dataset] table with a 'path'")
    return ExperimentConfig(
        name=raw.get("name", Path(path).stem),
        seed=seed,
        out_dir=str(base / raw.get("out_dir", "out")),
        dataset_path=str(base / ds["path"]),
        dataset_name=ds.get("name", Path(ds["path"]).name),
        representation=rep,
        train=_train_config(raw.get("train", {}), seed),
    )


def _split_features(dataset: LabeledDataset, rep: Representation):
    """Build (X_train, X_valid, X_test, model_tag[, vocabulary]) for a dataset."""
    if rep.kind == "tfidf":
        vocab = tfidf_mod.fit_vocabulary(list(dataset.train), min_df=rep.min_df)
        mats = [
            tfidf_mod.transform_many(list(dataset.split(s)), vocab, sublinear_tf=rep.sublinear_tf)
            for s in ("train", "valid", "test")
        ]
        return (*mats, "tfidf", vocab)
    with open_store(rep.store) as store:
        mats = []
        for s in ("train", "valid", "test"):
            ids = [d.id for d in dataset.split(s)]
            mats.append(embedding_matrix(aggregate_batch(store, ids, rep.strategy)))
        tag = f"embedding:{rep.strategy}:{store.model_tag}"
    return (*mats, tag, None)


def run_experiment(config: ExperimentConfig) -> EvalReport:
    """Execute one experiment and write head/log/report artifacts."""
    dataset = load_dataset(config.dataset_path, config.dataset_name)
    X_train, X_valid, X_test, tag, vocab = _split_features(dataset, config.representation)
    y = {s: np.array([d.label for d in dataset.split(s)]) for s in ("train", "valid", "test")}

    result = train_head(
        X_train,
        y["train"],
        config.train,
        valid=(X_valid, y["valid"]),
        trained_on=config.dataset_name,
        input_kind=tag,
    )
    report = evaluate_head(result.head, X_test, y["test"], dataset=config.dataset_name, model=tag)

    out = Path(config.out_dir) / config.dataset_name / config.representation.label
    out.mkdir(parents=True, exist_ok=True)
    save_head(result.head, out / "head.bin")
    if vocab is not None:
        tfidf_mod.save_vocabulary(vocab, out / "vocab.tsv")
    with open(out / "train_log.jsonl", "w", encoding="utf-8") as fh:
        for entry in result.log:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    (out / "report.json").write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return report


def collect_reports(out_dir: str | Path) -> list[EvalReport]:
    """Read every report.json under an experiment output directory."""
    reports = []
    for path in sorted(Path(out_dir).glob("*/*/report.json")):
        raw = json.loads(path.read_text(encoding="utf-8"))
        reports.append(EvalReport(**raw))
    return reports


def rank_reports(reports: Sequence[EvalReport]) -> RankingTable:
    """Pivot reports into a configurations x datasets ROC-AUC matrix and rank it."""
    if not reports:
        raise EmptyInput("no reports to rank")
    labels = sorted({r.model for r in reports})
    datasets = sorted({r.dataset for r in reports})
    cells: dict[tuple[str, str], float] = {}
    for r in reports:
        cells[(r.model, r.dataset)] = r.roc_auc
    matrix = np.empty((len(labels), len(datasets)))
    for i, label in enumerate(labels):
        for j, ds in enumerate(datasets):
            if (label, ds) not in cells:
                raise ShapeError(f"missing report for configuration {label!r} on dataset {ds!r}")
            matrix[i, j] = cells[(label, ds)]
    return average_rank(matrix, labels, datasets)


def run_cross_eval(path: str | Path) -> CrossMatrix:
    """Score heads across datasets per a TOML config (see docs/cli.md).

    Each [datasets.<name>] table names a dataset directory and its embedding
    store; [heads] maps source names to saved head files; an optional
    [pretrained] table gives TrainConfig fields for the per-dataset
    frozen-embedding row.
    """
    base = Path(path).parent
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    strategy = raw.get("strategy")
    if not strategy:
        raise ValueError("cross-eval config needs a top-level 'strategy'")
    datasets_raw = raw.get("datasets", {})
    if not datasets_raw:
        raise EmptyInput("cross-eval config lists no datasets")

    eval_sets = []
    train_sets = {}
    for name, table in datasets_raw.items():
        dataset = load_dataset(base / table["path"], name)
        with open_store(base / table["store"]) as store:
            test_ids = [d.id for d in dataset.test]
            X_test = embedding_matrix(aggregate_batch(store, test_ids, strategy))
            y_test = np.array([d.label for d in dataset.test])
            eval_sets.append((name, X_test, y_test))
            if "pretrained" in raw:
                train_ids = [d.id for d in dataset.train]
                X_train = embedding_matrix(aggregate_batch(store, train_ids, strategy))
                y_train = np.array([d.label for d in dataset.train])
                train_sets[name] = (X_train, y_train)

    heads = {name: load_head(base / p) for name, p in raw.get("heads", {}).items()}
    pretrained = None
    if "pretrained" in raw:
        cfg = _train_config(raw["pretrained"], int(raw.get("seed", 0)))
        pretrained = {
            name: train_head(X, y, cfg, trained_on=name, input_kind=f"embedding:{strategy}").head
            for name, (X, y) in train_sets.items()
        }
    if not heads and pretrained is None:
        raise EmptyInput("cross-eval config needs [heads] and/or [pretrained]")
    return cross_matrix(heads, eval_sets, pretrained_heads=pretrained)
