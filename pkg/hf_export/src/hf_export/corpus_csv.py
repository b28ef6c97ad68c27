"""Dataset CSV access matching the main package's file contract.

Splits live in ``train.csv``/``valid.csv``/``test.csv`` with ``text`` and
``polarity`` columns; document ids are ``"{split}:{row}"`` with 0-based data
rows, which is exactly what the downstream store consumers expect.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterator

SPLITS = ("train", "valid", "test")


def iter_split(dataset_dir: str | Path, split: str) -> Iterator[tuple[str, str, int]]:
    """Yield (doc_id, text, label) rows of one split, in file order."""
    path = Path(dataset_dir) / f"{split}.csv"
    if not path.is_file():
        raise FileNotFoundError(f"missing {split!r} split file: {path}")
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or "text" not in header or "polarity" not in header:
            raise ValueError(f"{path}: header must name 'text' and 'polarity' columns")
        text_col = header.index("text")
        label_col = header.index("polarity")
        for i, row in enumerate(reader):
            raw = row[label_col].strip()
            if raw not in ("0", "1"):
                raise ValueError(f"{path} line {reader.line_num}: polarity must be 0 or 1, got {raw!r}")
            yield f"{split}:{i}", row[text_col], int(raw)


def iter_documents(dataset_dir: str | Path) -> Iterator[tuple[str, str, int]]:
    """All documents of a dataset in train, valid, test order."""
    for split in SPLITS:
        yield from iter_split(dataset_dir, split)


def read_ids(dataset_dir: str | Path) -> list[str]:
    return [doc_id for doc_id, _, _ in iter_documents(dataset_dir)]
