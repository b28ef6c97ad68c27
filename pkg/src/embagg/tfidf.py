"""Bag-of-words baseline: 1-gram vocabulary and L2-normalized TF-IDF vectors.

The weighting is the smoothed form ``tf * (ln((1 + N) / (1 + df)) + 1)``
followed by L2 normalization, which keeps every weight finite and gives a
term present in all documents an idf of exactly 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .corpus import Document, tokenize_words
from .errors import EmptyInput


@dataclass(frozen=True)
class Vocabulary:
    """Fitted term index with per-term document frequencies.

    Indices are dense 0..V-1 in lexicographic term order, so a fit over the
    same corpus is always bit-identical.
    """

    term_to_index: dict[str, int]
    doc_freq: tuple[int, ...]
    n_docs: int

    @property
    def size(self) -> int:
        return len(self.term_to_index)

    @property
    def terms(self) -> list[str]:
        ordered = [""] * self.size
        for term, idx in self.term_to_index.items():
            ordered[idx] = term
        return ordered

    def idf(self, index: int) -> float:
        return math.log((1 + self.n_docs) / (1 + self.doc_freq[index])) + 1.0


@dataclass(frozen=True)
class SparseVector:
    """One document as sorted (index, weight) pairs over a fitted vocabulary."""

    dim: int
    indices: np.ndarray
    weights: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.weights
        return dense


def _texts(docs: Iterable[Document | str]) -> list[str]:
    return [d.text if isinstance(d, Document) else d for d in docs]


def fit_vocabulary(train_docs: Iterable[Document | str], min_df: int = 1) -> Vocabulary:
    """Build the 1-gram vocabulary of a training corpus.

    Document frequency counts documents, not occurrences.  Terms below
    ``min_df`` are dropped (default keeps everything).
    """
    texts = _texts(train_docs)
    if not texts:
        raise EmptyInput("cannot fit a vocabulary on an empty corpus")
    df: dict[str, int] = {}
    for text in texts:
        for term in set(tokenize_words(text)):
            df[term] = df.get(term, 0) + 1
    kept = sorted(term for term, count in df.items() if count >= min_df)
    return Vocabulary(
        term_to_index={term: i for i, term in enumerate(kept)},
        doc_freq=tuple(df[term] for term in kept),
        n_docs=len(texts),
    )


def transform(doc: Document | str, vocab: Vocabulary, sublinear_tf: bool = False) -> SparseVector:
    """Map one document to its L2-normalized TF-IDF vector.

    Out-of-vocabulary terms are ignored; a document with no known terms maps
    to the zero vector (dim preserved).
    """
    text = doc.text if isinstance(doc, Document) else doc
    counts: dict[int, int] = {}
    for term in tokenize_words(text):
        idx = vocab.term_to_index.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        return SparseVector(dim=vocab.size, indices=np.empty(0, dtype=np.int64), weights=np.empty(0))
    indices = np.array(sorted(counts), dtype=np.int64)
    tf = np.array([counts[i] for i in indices], dtype=np.float64)
    if sublinear_tf:
        tf = 1.0 + np.log(tf)
    weights = tf * np.array([vocab.idf(int(i)) for i in indices])
    norm = float(np.sqrt(np.dot(weights, weights)))
    if norm > 0.0:
        weights = weights / norm
    return SparseVector(dim=vocab.size, indices=indices, weights=weights)


def transform_many(docs: Sequence[Document | str], vocab: Vocabulary, sublinear_tf: bool = False) -> sp.csr_matrix:
    """Vectorize a batch of documents into one CSR matrix (rows in input order)."""
    indptr = [0]
    indices: list[np.ndarray] = []
    data: list[np.ndarray] = []
    for doc in docs:
        vec = transform(doc, vocab, sublinear_tf=sublinear_tf)
        indices.append(vec.indices)
        data.append(vec.weights)
        indptr.append(indptr[-1] + vec.nnz)
    return sp.csr_matrix(
        (
            np.concatenate(data) if data else np.empty(0),
            np.concatenate(indices) if indices else np.empty(0, dtype=np.int64),
            np.asarray(indptr, dtype=np.int64),
        ),
        shape=(len(docs), vocab.size),
    )


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write the vocabulary as UTF-8 text: `n_docs=<N>` then `term<TAB>df` rows."""
    lines = [f"n_docs={vocab.n_docs}"]
    lines.extend(f"{term}\t{df}" for term, df in zip(vocab.terms, vocab.doc_freq))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith("n_docs="):
        raise ValueError(f"{path}: expected a first line of the form n_docs=<N>")
    n_docs = int(lines[0].split("=", 1)[1])
    term_to_index: dict[str, int] = {}
    doc_freq: list[int] = []
    for i, line in enumerate(lines[1:]):
        term, df = line.split("\t")
        term_to_index[term] = i
        doc_freq.append(int(df))
    return Vocabulary(term_to_index=term_to_index, doc_freq=tuple(doc_freq), n_docs=n_docs)


class TfidfVectorizer(BaseEstimator, TransformerMixin):
    """Estimator wrapper over fit_vocabulary/transform for pipeline use.

    fit() learns the vocabulary from raw texts (or Documents); transform()
    returns a CSR matrix of unit-norm rows.
    """

    def __init__(self, min_df: int = 1, sublinear_tf: bool = False):
        self.min_df = min_df
        self.sublinear_tf = sublinear_tf

    def fit(self, X, y=None):
        self.vocabulary_ = fit_vocabulary(X, min_df=self.min_df)
        return self

    def transform(self, X) -> sp.csr_matrix:
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError("TfidfVectorizer must be fitted before transform")
        return transform_many(list(X), self.vocabulary_, sublinear_tf=self.sublinear_tf)

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError("TfidfVectorizer must be fitted first")
        return np.asarray(self.vocabulary_.terms, dtype=object)
