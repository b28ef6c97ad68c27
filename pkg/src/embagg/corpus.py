"""Labeled review datasets: CSV ingestion, concatenation, and summary statistics.

A dataset directory holds three UTF-8 CSV files -- ``train.csv``, ``valid.csv``,
``test.csv`` -- each with a header row naming at least the columns ``text``
and ``polarity`` (0 = negative, 1 = positive).  Document ids are assigned as
``"{split}:{row}"`` with 0-based data-row numbering; the exporter tooling
relies on reproducing exactly these ids from the same files.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyInput, EmptySplit, MalformedRecord, MissingSplit

SPLITS = ("train", "valid", "test")

_WORD = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class Document:
    """One review with a binary polarity label."""

    id: str
    text: str
    label: int


@dataclass(frozen=True)
class LabeledDataset:
    """Train/valid/test partitions of documents; immutable once built."""

    name: str
    train: tuple[Document, ...]
    valid: tuple[Document, ...]
    test: tuple[Document, ...]

    def split(self, name: str) -> tuple[Document, ...]:
        if name not in SPLITS:
            raise KeyError(f"unknown split {name!r}")
        return getattr(self, name)

    @property
    def documents(self) -> tuple[Document, ...]:
        return self.train + self.valid + self.test


@dataclass(frozen=True)
class DatasetStats:
    """Per-dataset summary row: sizes, token lengths, vocabulary, class balance."""

    name: str
    n_train: int
    n_valid: int
    n_test: int
    mean_len: float
    median_len: int
    vocab_size: int
    pos_fraction: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_train": self.n_train,
            "n_valid": self.n_valid,
            "n_test": self.n_test,
            "mean_len": self.mean_len,
            "median_len": self.median_len,
            "vocab_size": self.vocab_size,
            "pos_fraction": self.pos_fraction,
        }


def tokenize_words(text: str) -> list[str]:
    """Lowercase and split into maximal runs of Unicode letters/digits.

    >>> tokenize_words("Ótimo produto!!")
    ['ótimo', 'produto']
    """
    return _WORD.findall(text.lower())


def _read_split(path: Path, split: str) -> list[Document]:
    if not path.is_file():
        raise MissingSplit(split, str(path))
    docs: list[Document] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptySplit(split) from None
        try:
            text_col = header.index("text")
            label_col = header.index("polarity")
        except ValueError:
            raise MalformedRecord(1, "header must name 'text' and 'polarity' columns") from None
        for i, row in enumerate(reader):
            line = reader.line_num
            if len(row) <= max(text_col, label_col):
                raise MalformedRecord(line, f"expected {len(header)} fields, got {len(row)}")
            raw = row[label_col].strip()
            if raw not in ("0", "1"):
                raise MalformedRecord(line, f"polarity must be 0 or 1, got {raw!r}")
            docs.append(Document(id=f"{split}:{i}", text=row[text_col], label=int(raw)))
    if not docs:
        raise EmptySplit(split)
    return docs


def load_dataset(path: str | Path, name: str) -> LabeledDataset:
    """Load ``train.csv``/``valid.csv``/``test.csv`` from a directory.

    Deterministic: the same files always yield the same documents, ids, and
    order.  Raises MissingSplit, EmptySplit, or MalformedRecord (with the
    offending line number) on contract violations.
    """
    base = Path(path)
    parts = {split: tuple(_read_split(base / f"{split}.csv", split)) for split in SPLITS}
    return LabeledDataset(name=name, train=parts["train"], valid=parts["valid"], test=parts["test"])


def concat_datasets(datasets: Sequence[LabeledDataset], name: str = "All") -> LabeledDataset:
    """Concatenate datasets split-wise, re-prefixing ids with the source name."""
    if not datasets:
        raise EmptyInput("need at least one dataset to concatenate")

    def merged(split: str) -> tuple[Document, ...]:
        return tuple(
            Document(id=f"{ds.name}/{doc.id}", text=doc.text, label=doc.label)
            for ds in datasets
            for doc in ds.split(split)
        )

    return LabeledDataset(name=name, train=merged("train"), valid=merged("valid"), test=merged("test"))


def _lower_median(values: Sequence[int]) -> int:
    # lower of the two middle elements for even counts, so the result stays integral
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def summarize(dataset: LabeledDataset) -> DatasetStats:
    """Compute the summary row for one dataset.

    Lengths are word-token counts over all splits; the vocabulary is the set of
    distinct 1-grams in the training split; the positive fraction covers all
    splits.  Values are exact -- rounding happens only at display time.
    """
    docs = dataset.documents
    lengths = [len(tokenize_words(d.text)) for d in docs]
    vocab: set[str] = set()
    for d in dataset.train:
        vocab.update(tokenize_words(d.text))
    n_pos = sum(d.label for d in docs)
    return DatasetStats(
        name=dataset.name,
        n_train=len(dataset.train),
        n_valid=len(dataset.valid),
        n_test=len(dataset.test),
        mean_len=sum(lengths) / len(lengths) if lengths else 0.0,
        median_len=_lower_median(lengths) if lengths else 0,
        vocab_size=len(vocab),
        pos_fraction=n_pos / len(docs) if docs else 0.0,
    )


def stats_table(rows: Iterable[DatasetStats]) -> str:
    """Render summary rows as an aligned text table."""
    header = ("dataset", "train", "valid", "test", "mean/median len", "vocab", "positive")
    cells = [header]
    for s in rows:
        cells.append(
            (
                s.name,
                str(s.n_train),
                str(s.n_valid),
                str(s.n_test),
                f"{s.mean_len:.1f} / {s.median_len}",
                str(s.vocab_size),
                f"{100.0 * s.pos_fraction:.1f}%",
            )
        )
    widths = [max(len(row[c]) for row in cells) for c in range(len(header))]
    lines = []
    for row in cells:
        lines.append("  ".join(val.ljust(w) if i == 0 else val.rjust(w) for i, (val, w) in enumerate(zip(row, widths))))
    return "\n".join(lines)
