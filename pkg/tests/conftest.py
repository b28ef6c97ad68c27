from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from embagg import LabeledDataset, ToyEncoderConfig, load_dataset
from embagg.store import StoreWriter
from embagg.toy_encoder import toy_encode


def write_split(path: Path, rows: list[tuple[str, object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "polarity"])
        writer.writerows(rows)


def make_dataset_dir(
    base: Path,
    train: list[tuple[str, object]],
    valid: list[tuple[str, object]],
    test: list[tuple[str, object]],
) -> Path:
    base.mkdir(parents=True, exist_ok=True)
    write_split(base / "train.csv", train)
    write_split(base / "valid.csv", valid)
    write_split(base / "test.csv", test)
    return base


POS_WORDS = ["bom", "excelente", "perfeito", "adorei", "recomendo", "rápido"]
NEG_WORDS = ["ruim", "péssimo", "horrível", "odiei", "lento", "defeito"]
FILLER = ["produto", "loja", "entrega", "chegou", "caixa", "preço", "cor", "uso"]


def make_sentiment_rows(n: int, seed: int) -> list[tuple[str, int]]:
    """Balanced synthetic reviews whose wording correlates with the label."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        label = i % 2
        words = list(rng.choice(POS_WORDS if label else NEG_WORDS, size=3))
        words += list(rng.choice(FILLER, size=int(rng.integers(2, 5))))
        rng.shuffle(words)
        rows.append((" ".join(words), label))
    return rows


@pytest.fixture
def toy_dataset_dir(tmp_path: Path) -> Path:
    return make_dataset_dir(
        tmp_path / "toy",
        train=make_sentiment_rows(60, seed=1),
        valid=make_sentiment_rows(20, seed=2),
        test=make_sentiment_rows(20, seed=3),
    )


@pytest.fixture
def toy_dataset(toy_dataset_dir: Path) -> LabeledDataset:
    return load_dataset(toy_dataset_dir, "toy")


def make_separable_store(
    path: Path,
    dataset: LabeledDataset,
    hidden_size: int = 16,
    positions: int = 12,
    seed: int = 11,
    precision: str = "f32",
) -> None:
    """Toy-encoder store where the class token dominates every document.

    Positive documents repeat token 1, negative documents token 2, so any
    mean-containing aggregation separates the classes linearly.
    """
    config = ToyEncoderConfig(seed=seed, hidden_size=hidden_size, positions=positions)
    docs = dataset.documents
    rng = np.random.default_rng(seed)
    with StoreWriter(
        path,
        [d.id for d in docs],
        positions=positions,
        hidden_size=hidden_size,
        precision=precision,
        model_tag=f"toy:seed={seed}",
    ) as writer:
        for d in docs:
            class_token = 1 if d.label == 1 else 2
            filler = [int(v) for v in rng.integers(100, 200, size=positions // 2)]
            ids = [class_token] * (positions - len(filler)) + filler
            writer.append(toy_encode(ids, config, doc_id=d.id).data)
