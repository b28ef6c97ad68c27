"""Ranking metrics and cross-dataset comparison tables.

roc_auc uses the rank-sum identity with midranks, so tied scores earn half
credit and the result matches exhaustive positive/negative pair counting
exactly.  average_rank builds leaderboard-style tables (rank 1 = best) and
cross_matrix scores every trained head against every dataset's test split.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._validation import check_binary_labels
from .errors import ShapeError, UndefinedMetric
from .linear import LinearHead, predict_proba

PROB_CLIP = 1e-15


def midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank positions."""
    values = np.asarray(values)
    order = np.argsort(values, kind="mergesort")
    ordered = values[order]
    boundaries = np.flatnonzero(np.r_[True, ordered[1:] != ordered[:-1], True])
    counts = np.diff(boundaries)
    # average of 1-based positions start+1 .. start+count
    group_ranks = boundaries[:-1] + (counts + 1) / 2.0
    ranks = np.empty(values.shape[0])
    ranks[order] = np.repeat(group_ranks, counts)
    return ranks


def roc_auc(scores, labels) -> float:
    """Probability a random positive outscores a random negative (ties = 0.5).

    Rank-sum computation, O(n log n); requires both classes present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = check_binary_labels(labels)
    if scores.ndim != 1 or scores.shape[0] != labels.shape[0]:
        raise ShapeError(f"{scores.shape[0]} scores for {labels.shape[0]} labels")
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetric("ROC-AUC needs at least one positive and one negative label")
    ranks = midranks(scores)
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def log_loss(probs, labels) -> float:
    """Mean negative log-likelihood, probabilities clipped to [1e-15, 1 - 1e-15]."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise ShapeError(f"{p.shape[0] if p.ndim else 0} probabilities for {y.shape[0] if y.ndim else 0} labels")
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass(frozen=True)
class EvalReport:
    """ROC-AUC and log-loss of one model on one dataset's test split."""

    dataset: str
    model: str
    roc_auc: float
    log_loss: float
    n: int

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "model": self.model,
            "roc_auc": self.roc_auc,
            "log_loss": self.log_loss,
            "n": self.n,
        }


def evaluate_head(head: LinearHead, X, y, dataset: str = "", model: str = "") -> EvalReport:
    """Score a trained head on one labeled feature matrix."""
    y = check_binary_labels(y)
    p = np.asarray(predict_proba(head, X))
    return EvalReport(
        dataset=dataset,
        model=model or head.input_kind,
        roc_auc=roc_auc(p, y),
        log_loss=log_loss(p, y.astype(np.float64)),
        n=int(y.shape[0]),
    )


@dataclass(frozen=True)
class RankingTable:
    """Per-dataset ranks of each configuration plus the row average.

    Rows are sorted ascending by average rank (rank 1 = highest metric);
    per-column ranks use midranks, so each column sums to k(k+1)/2.
    """

    labels: tuple[str, ...]
    datasets: tuple[str, ...]
    ranks: np.ndarray  # (k, d)
    avg_ranks: np.ndarray  # (k,)

    def to_dict(self) -> dict:
        return {
            "datasets": list(self.datasets),
            "rows": [
                {
                    "label": label,
                    "ranks": [float(r) for r in self.ranks[i]],
                    "avg_rank": float(self.avg_ranks[i]),
                }
                for i, label in enumerate(self.labels)
            ],
        }

    def to_text(self) -> str:
        header = ["configuration", *self.datasets, "avg rank"]
        rows = [header]
        for i, label in enumerate(self.labels):
            rows.append([label, *(f"{r:g}" for r in self.ranks[i]), f"{self.avg_ranks[i]:.2f}"])
        widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(w) if c == 0 else cell.rjust(w) for c, (cell, w) in enumerate(zip(row, widths)))
            for row in rows
        )


def average_rank(values, labels: Sequence[str], datasets: Sequence[str]) -> RankingTable:
    """Rank configurations per dataset by descending metric and average the ranks."""
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError("ranking input must be a 2-D configurations x datasets matrix")
    k, d = matrix.shape
    if len(labels) != k or len(datasets) != d:
        raise ShapeError(f"matrix is {k}x{d} but got {len(labels)} labels and {len(datasets)} datasets")
    if not np.isfinite(matrix).all():
        raise ValueError("ranking input contains non-finite cells")
    ranks = np.column_stack([midranks(-matrix[:, j]) for j in range(d)])
    avg = ranks.mean(axis=1)
    order = sorted(range(k), key=lambda i: (avg[i], labels[i]))
    return RankingTable(
        labels=tuple(labels[i] for i in order),
        datasets=tuple(datasets),
        ranks=ranks[order],
        avg_ranks=avg[order],
    )


@dataclass(frozen=True)
class CrossMatrix:
    """ROC-AUC (%) of each source head evaluated on each dataset's test split."""

    sources: tuple[str, ...]
    datasets: tuple[str, ...]
    values: np.ndarray  # (k, d), percent, full precision

    def to_dict(self) -> dict:
        return {
            "datasets": list(self.datasets),
            "rows": [
                {"source": source, "roc_auc_pct": [float(v) for v in self.values[i]]}
                for i, source in enumerate(self.sources)
            ],
        }

    def to_text(self) -> str:
        # one decimal for display; full precision stays in .values
        header = ["trained on", *self.datasets]
        rows = [header]
        for i, source in enumerate(self.sources):
            rows.append([source, *(f"{v:.1f}" for v in self.values[i])])
        widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(w) if c == 0 else cell.rjust(w) for c, (cell, w) in enumerate(zip(row, widths)))
            for row in rows
        )


def cross_matrix(
    heads: Mapping[str, LinearHead],
    datasets: Sequence[tuple[str, object, object]],
    pretrained_heads: "Mapping[str, LinearHead] | None" = None,
) -> CrossMatrix:
    """Evaluate every head on every dataset's test features.

    ``datasets`` is a sequence of (name, X_test, y_test).  When
    ``pretrained_heads`` maps each dataset name to a head trained on that
    dataset's own frozen-embedding training split, a final "pretrained" row is
    appended.
    """
    names = [name for name, _, _ in datasets]
    rows: list[np.ndarray] = []
    sources: list[str] = []
    for source, head in heads.items():
        cells = [100.0 * roc_auc(np.asarray(predict_proba(head, X)), y) for _, X, y in datasets]
        rows.append(np.asarray(cells))
        sources.append(source)
    if pretrained_heads is not None:
        missing = [name for name in names if name not in pretrained_heads]
        if missing:
            raise KeyError(f"pretrained heads missing for datasets: {missing}")
        cells = [
            100.0 * roc_auc(np.asarray(predict_proba(pretrained_heads[name], X)), y)
            for name, X, y in datasets
        ]
        rows.append(np.asarray(cells))
        sources.append("pretrained")
    return CrossMatrix(sources=tuple(sources), datasets=tuple(names), values=np.vstack(rows))
