from __future__ import annotations

import csv
import os
from pathlib import Path

import pytest
import torch

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "bom", "ruim", "produto", "otimo", "pessimo", "loja", "entrega",
    "rapido", "lento", "caro", "barato", "recomendo", "defeito",
    "a", "o", "de", "e", "##s", "##a", "##o",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> Path:
    """Randomly initialized two-layer encoder saved locally; no network needed."""
    from transformers import BertConfig, BertModel, BertTokenizerFast

    ckpt = tmp_path_factory.mktemp("tiny-ckpt")
    (ckpt / "vocab.txt").write_text("\n".join(VOCAB), encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(ckpt / "vocab.txt"), do_lower_case=True)
    tokenizer.save_pretrained(ckpt)
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(ckpt)
    return ckpt


def _write_split(path: Path, rows: list[tuple[str, int]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "polarity"])
        writer.writerows(rows)


@pytest.fixture(scope="session")
def tiny_dataset_dir(tmp_path_factory) -> Path:
    base = tmp_path_factory.mktemp("tiny-data")
    train = [
        ("bom produto recomendo", 1),
        ("otimo rapido barato", 1),
        ("bom otimo loja", 1),
        ("ruim lento caro", 0),
        ("pessimo defeito", 0),
        ("ruim pessimo entrega", 0),
    ]
    valid = [("bom recomendo", 1), ("ruim defeito", 0)]
    test = [("otimo produto", 1), ("pessimo lento", 0)]
    _write_split(base / "train.csv", train)
    _write_split(base / "valid.csv", valid)
    _write_split(base / "test.csv", test)
    return base
