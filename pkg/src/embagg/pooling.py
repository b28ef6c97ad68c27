"""Aggregation strategies mapping a T x H token-embedding matrix to one vector.

Thirteen recipes over the per-token output embeddings: selections (first,
second, last), sums/means with or without the first position, and
concatenations with spread statistics (std, min/max, quantiles).  Output
dimension is 1x, 2x, or 3x the hidden size depending on how many vectors the
recipe concatenates.

Rows are indexed 1..T in the descriptions below; position 1 is the slot the
encoder reserves for its sequence-classification token.  Reductions always
run in float64 regardless of the stored precision, so storage at f16 remains
purely a storage decision.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_token_matrix
from .errors import InsufficientTokens, UnknownDocument
from .store import EmbeddingStore, TokenEmbeddingMatrix


class AggregationStrategy(Enum):
    """One pooling recipe; the value is the CLI/kebab-case name."""

    FIRST = "first"
    SECOND = "second"
    LAST = "last"
    SUM_ALL = "sum-all"
    MEAN_ALL = "mean-all"
    SUM_EXCEPT_FIRST = "sum-except-first"
    MEAN_EXCEPT_FIRST = "mean-except-first"
    FIRST_SUM = "first-sum"
    FIRST_MEAN = "first-mean"
    FIRST_MEAN_STD = "first-mean-std"
    FIRST_MEAN_MAX = "first-mean-max"
    MEAN_MIN_MAX = "mean-min-max"
    QUANTILES_25_50_75 = "quantiles-25-50-75"

    @property
    def multiplicity(self) -> int:
        """How many H-sized vectors the strategy concatenates (1, 2, or 3)."""
        if self in (AggregationStrategy.FIRST_SUM, AggregationStrategy.FIRST_MEAN):
            return 2
        if self in (
            AggregationStrategy.FIRST_MEAN_STD,
            AggregationStrategy.FIRST_MEAN_MAX,
            AggregationStrategy.MEAN_MIN_MAX,
            AggregationStrategy.QUANTILES_25_50_75,
        ):
            return 3
        return 1

    @property
    def min_positions(self) -> int:
        """Smallest T the strategy is defined for."""
        if self in (
            AggregationStrategy.FIRST,
            AggregationStrategy.LAST,
            AggregationStrategy.SUM_ALL,
            AggregationStrategy.MEAN_ALL,
        ):
            return 1
        return 2


STRATEGIES: tuple[AggregationStrategy, ...] = tuple(AggregationStrategy)


def as_strategy(value: "AggregationStrategy | str") -> AggregationStrategy:
    """Accept either the enum or its kebab-case name."""
    if isinstance(value, AggregationStrategy):
        return value
    try:
        return AggregationStrategy(value)
    except ValueError:
        names = ", ".join(s.value for s in STRATEGIES)
        raise ValueError(f"unknown aggregation strategy {value!r}; expected one of: {names}") from None


@dataclass(frozen=True)
class DocumentEmbedding:
    """Pooled representation of one document."""

    doc_id: str
    data: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.data.shape[0])


def output_dim(strategy: "AggregationStrategy | str", hidden_size: int) -> int:
    """Dimension of the pooled vector: multiplicity x hidden size."""
    if hidden_size < 1:
        raise ValueError(f"hidden size must be >= 1, got {hidden_size}")
    return as_strategy(strategy).multiplicity * hidden_size


def aggregate(
    matrix: "TokenEmbeddingMatrix | np.ndarray",
    strategy: "AggregationStrategy | str",
    n_tokens: int | None = None,
) -> DocumentEmbedding:
    """Pool one token-embedding matrix into a document embedding.

    By default every position participates, padding included.  Passing
    ``n_tokens`` enables length-aware pooling: only rows 1..n_tokens are
    aggregated (and "last" becomes the last real token).
    """
    strategy = as_strategy(strategy)
    doc_id = matrix.doc_id if isinstance(matrix, TokenEmbeddingMatrix) else ""
    raw = matrix.data if isinstance(matrix, TokenEmbeddingMatrix) else matrix
    m = check_token_matrix(raw).astype(np.float64)
    t = m.shape[0]
    if n_tokens is not None:
        if not 1 <= n_tokens <= t:
            raise ValueError(f"n_tokens must be in 1..{t}, got {n_tokens}")
        m = m[:n_tokens]
        t = n_tokens
    if t < strategy.min_positions:
        raise InsufficientTokens(
            f"strategy {strategy.value!r} needs at least {strategy.min_positions} positions, got {t}"
        )

    first = m[0]
    rest = m[1:]
    if strategy is AggregationStrategy.FIRST:
        out = first
    elif strategy is AggregationStrategy.SECOND:
        out = m[1]
    elif strategy is AggregationStrategy.LAST:
        out = m[-1]
    elif strategy is AggregationStrategy.SUM_ALL:
        out = m.sum(axis=0)
    elif strategy is AggregationStrategy.MEAN_ALL:
        out = m.mean(axis=0)
    elif strategy is AggregationStrategy.SUM_EXCEPT_FIRST:
        out = rest.sum(axis=0)
    elif strategy is AggregationStrategy.MEAN_EXCEPT_FIRST:
        out = rest.mean(axis=0)
    elif strategy is AggregationStrategy.FIRST_SUM:
        out = np.concatenate([first, rest.sum(axis=0)])
    elif strategy is AggregationStrategy.FIRST_MEAN:
        out = np.concatenate([first, rest.mean(axis=0)])
    elif strategy is AggregationStrategy.FIRST_MEAN_STD:
        # population std: divide by the count, not count - 1
        out = np.concatenate([first, rest.mean(axis=0), rest.std(axis=0)])
    elif strategy is AggregationStrategy.FIRST_MEAN_MAX:
        out = np.concatenate([first, rest.mean(axis=0), rest.max(axis=0)])
    elif strategy is AggregationStrategy.MEAN_MIN_MAX:
        out = np.concatenate([rest.mean(axis=0), rest.min(axis=0), rest.max(axis=0)])
    elif strategy is AggregationStrategy.QUANTILES_25_50_75:
        q = np.quantile(rest, (0.25, 0.50, 0.75), axis=0)  # linear interpolation
        out = np.concatenate([q[0], q[1], q[2]])
    else:  # pragma: no cover
        raise AssertionError(f"unhandled strategy {strategy}")
    return DocumentEmbedding(doc_id=doc_id, data=np.ascontiguousarray(out))


def _thread_count() -> int:
    raw = os.environ.get("EMBAGG_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def aggregate_batch(
    store: EmbeddingStore,
    doc_ids: Sequence[str],
    strategy: "AggregationStrategy | str",
) -> list[DocumentEmbedding]:
    """Pool many documents from a store, preserving id order.

    Results land in pre-assigned slots, so the output is deterministic even
    when EMBAGG_THREADS enables parallel execution.
    """
    strategy = as_strategy(strategy)
    for doc_id in doc_ids:
        if doc_id not in store:
            raise UnknownDocument(doc_id)
    results: list[DocumentEmbedding | None] = [None] * len(doc_ids)

    def work(i: int) -> None:
        results[i] = aggregate(store.get(doc_ids[i]), strategy)

    threads = _thread_count()
    if threads > 1 and len(doc_ids) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(len(doc_ids))))
    else:
        for i in range(len(doc_ids)):
            work(i)
    return results  # type: ignore[return-value]


def embedding_matrix(embeddings: Sequence[DocumentEmbedding]) -> np.ndarray:
    """Stack document embeddings into an (n, dim) float64 design matrix."""
    if not embeddings:
        return np.empty((0, 0))
    return np.vstack([e.data for e in embeddings])


class EmbeddingAggregator(BaseEstimator, TransformerMixin):
    """Stateless transformer: (n, T, H) token matrices -> (n, dim) embeddings."""

    def __init__(self, strategy: "AggregationStrategy | str" = "first-mean-std"):
        self.strategy = strategy

    def fit(self, X, y=None):
        as_strategy(self.strategy)  # validate eagerly
        return self

    def transform(self, X) -> np.ndarray:
        strategy = as_strategy(self.strategy)
        rows = [aggregate(m, strategy).data for m in X]
        if not rows:
            return np.empty((0, 0))
        return np.vstack(rows)
