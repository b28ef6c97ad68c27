"""Logistic-regression head trained with AdamW under a slanted triangular LR.

The same trainer serves the TF-IDF baseline (dense or CSR inputs, classic L2
regularization) and the pooled-embedding classifiers (input dropout standing
in for head dropout, since the encoder is frozen here).  Training is fully
deterministic given the seed: one RNG drives shuffling and dropout in a fixed
order, and all math runs in float64.
"""
from __future__ import annotations

import dataclasses
import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ._validation import check_binary_labels, check_features, check_vector
from .errors import EmptyInput, InvalidStep, NonFiniteGradient, ShapeError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

HEAD_MAGIC = b"LRHD"
HEAD_VERSION = 1


@dataclass(frozen=True)
class StlrSchedule:
    """Slanted triangular schedule: linear rise over the warm-up steps, then linear decay to zero."""

    base_lr: float
    total_steps: int
    warmup_fraction: float = 0.1

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 0.0 < self.warmup_fraction < 1.0:
            raise ValueError(f"warmup_fraction must be in (0, 1), got {self.warmup_fraction}")

    @property
    def warmup_steps(self) -> int:
        return math.ceil(self.warmup_fraction * self.total_steps)


def stlr_lr_at(step: int, schedule: StlrSchedule) -> float:
    """Learning rate at an integer step in [0, total_steps].

    Evaluated in exact rational arithmetic with a single rounding to float,
    so each linear segment is exactly linear in f64 and the peak at the end
    of warm-up is exactly base_lr.
    """
    total = schedule.total_steps
    if not 0 <= step <= total:
        raise InvalidStep(f"step must be in 0..{total}, got {step}")
    w = schedule.warmup_steps
    base = Fraction(schedule.base_lr)
    if step <= w:
        return float(base * step / w)
    return float(base * (total - step) / (total - w))


def adamw_step(
    params: np.ndarray,
    grads: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step: int,
    lr: float,
    weight_decay: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One bias-corrected Adam update with decoupled weight decay.

    Returns the updated (params, m, v); inputs are not mutated.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != np.shape(m) or params.shape != np.shape(v):
        raise ShapeError(
            f"params {params.shape}, grads {grads.shape}, m {np.shape(m)}, v {np.shape(v)} must all agree"
        )
    if step < 1:
        raise InvalidStep(f"optimizer step must be >= 1, got {step}")
    if not np.all(np.isfinite(grads)):
        raise NonFiniteGradient("gradient contains NaN or infinity")
    m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grads
    v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grads * grads
    m_hat = m / (1.0 - ADAM_BETA1**step)
    v_hat = v / (1.0 - ADAM_BETA2**step)
    params = params - lr * (m_hat / (np.sqrt(v_hat) + ADAM_EPS) + weight_decay * params)
    return params, m, v


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run; max_epochs is capped at 4."""

    base_lr: float
    dropout: float = 0.0
    weight_decay: float = 0.0
    max_epochs: int = 4
    batch_size: int = 32
    seed: int = 0
    l2: float | None = None  # None resolves to 1/n_train at fit time

    def __post_init__(self):
        if self.base_lr <= 0.0:
            raise ValueError(f"base_lr must be positive, got {self.base_lr}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.weight_decay < 0.0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if not 1 <= self.max_epochs <= 4:
            raise ValueError(f"max_epochs must be in 1..4, got {self.max_epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.l2 is not None and self.l2 < 0.0:
            raise ValueError(f"l2 must be >= 0, got {self.l2}")


def finetune_grid(max_epochs: int = 4, **common) -> list[TrainConfig]:
    """The standard fine-tuning search grid: lr {2.5e-5, 5e-5} x dropout {0, 10%}."""
    return [
        TrainConfig(base_lr=lr, dropout=dr, max_epochs=max_epochs, **common)
        for lr in (2.5e-5, 5e-5)
        for dr in (0.0, 0.10)
    ]


FINETUNE_GRID = finetune_grid()


@dataclass(frozen=True)
class LinearHead:
    """Trained weights/bias plus provenance tags."""

    weights: np.ndarray
    bias: float
    trained_on: str = ""
    input_kind: str = ""

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])


def decision_scores(head: LinearHead, X) -> np.ndarray:
    X = check_features(X, dim=head.dim)
    return np.asarray(X @ head.weights) + head.bias


def predict_proba(head: LinearHead, x) -> "float | np.ndarray":
    """sigmoid(w . x + b); accepts a single vector or an (n, D) matrix."""
    if not sp.issparse(x) and np.ndim(x) == 1:
        vec = check_vector(x, dim=head.dim)
        return float(expit(float(vec @ head.weights) + head.bias))
    return expit(decision_scores(head, x))


def logistic_loss(weights: np.ndarray, bias: float, X, y, l2: float = 0.0) -> float:
    """Mean binary cross-entropy plus l2 * ||w||^2 / 2 (bias unregularized)."""
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(X @ weights) + bias
    # softplus(z) - y*z is the numerically stable form of the per-sample BCE
    bce = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return bce + 0.5 * l2 * float(weights @ weights)


def logistic_loss_grad(weights: np.ndarray, bias: float, X, y, l2: float = 0.0) -> tuple[np.ndarray, float]:
    """Analytic gradient of logistic_loss with respect to (weights, bias)."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    z = np.asarray(X @ weights) + bias
    residual = (expit(z) - y) / n
    grad_w = np.asarray(X.T @ residual) + l2 * weights
    grad_b = float(residual.sum())
    return grad_w, grad_b


def _apply_dropout(Xb, rate: float, rng: np.random.Generator):
    # inverted scaling keeps expectations unchanged at inference
    scale = 1.0 / (1.0 - rate)
    if sp.issparse(Xb):
        Xb = Xb.copy()
        keep = rng.random(Xb.data.shape) >= rate
        Xb.data = Xb.data * keep * scale
        return Xb
    keep = rng.random(Xb.shape) >= rate
    return Xb * (keep * scale)


@dataclass
class TrainResult:
    head: LinearHead
    log: list[dict] = field(default_factory=list)
    best_epoch: int | None = None


def train_head(
    X,
    y,
    config: TrainConfig,
    valid: "tuple | None" = None,
    trained_on: str = "",
    input_kind: str = "",
) -> TrainResult:
    """Fit the logistic head with mini-batch AdamW under the triangular schedule.

    When a (X_valid, y_valid) pair is supplied, the per-epoch validation
    log-loss is recorded and the returned head is the epoch snapshot that
    minimized it; otherwise the final epoch is returned.  Deterministic given
    config.seed.
    """
    X = check_features(X)
    n, dim = X.shape
    if n < 1:
        raise EmptyInput("need at least one training sample")
    y = check_binary_labels(y, n=n).astype(np.float64)
    Xv = yv = None
    if valid is not None:
        Xv = check_features(valid[0], dim=dim)
        yv = check_binary_labels(valid[1], n=Xv.shape[0]).astype(np.float64)
    l2 = config.l2 if config.l2 is not None else 1.0 / n

    rng = np.random.default_rng(config.seed)
    params = np.zeros(dim + 1)
    m = np.zeros(dim + 1)
    v = np.zeros(dim + 1)
    n_batches = math.ceil(n / config.batch_size)
    schedule = StlrSchedule(config.base_lr, total_steps=config.max_epochs * n_batches)

    log: list[dict] = []
    snapshots: list[np.ndarray] = []
    step = 0
    lr = 0.0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            Xb, yb = X[batch], y[batch]
            if config.dropout > 0.0:
                Xb = _apply_dropout(Xb, config.dropout, rng)
            step += 1
            lr = stlr_lr_at(step, schedule)
            grad_w, grad_b = logistic_loss_grad(params[:dim], params[dim], Xb, yb, l2)
            grads = np.concatenate([grad_w, [grad_b]])
            params, m, v = adamw_step(params, grads, m, v, step, lr, config.weight_decay)
        snapshots.append(params.copy())
        entry = {
            "epoch": epoch,
            "train_loss": logistic_loss(params[:dim], params[dim], X, y, l2),
            "lr": lr,
        }
        if Xv is not None:
            entry["valid_loss"] = logistic_loss(params[:dim], params[dim], Xv, yv, 0.0)
        log.append(entry)

    if Xv is not None:
        best_epoch = min(log, key=lambda e: (e["valid_loss"], e["epoch"]))["epoch"]
    else:
        best_epoch = config.max_epochs
    chosen = snapshots[best_epoch - 1]
    head = LinearHead(weights=chosen[:dim].copy(), bias=float(chosen[dim]), trained_on=trained_on, input_kind=input_kind)
    return TrainResult(head=head, log=log, best_epoch=best_epoch)


def select_hyperparams(
    grid: Sequence[TrainConfig],
    X,
    y,
    X_valid,
    y_valid,
    trained_on: str = "",
    input_kind: str = "",
) -> tuple[TrainConfig, list[dict]]:
    """Pick the (config, epoch) pair minimizing validation log-loss.

    Ties break toward lower learning rate, then lower dropout, then fewer
    epochs.  Returns the winning config with max_epochs set to its best epoch,
    plus one record per evaluated config.
    """
    if not grid:
        raise EmptyInput("hyperparameter grid is empty")
    records: list[dict] = []
    for config in grid:
        result = train_head(X, y, config, valid=(X_valid, y_valid), trained_on=trained_on, input_kind=input_kind)
        by_epoch = {e["epoch"]: e["valid_loss"] for e in result.log}
        best_epoch = min(by_epoch, key=lambda ep: (by_epoch[ep], ep))
        records.append(
            {
                "config": config,
                "best_epoch": best_epoch,
                "valid_loss": by_epoch[best_epoch],
                "log": result.log,
            }
        )
    winner = min(
        records,
        key=lambda r: (r["valid_loss"], r["config"].base_lr, r["config"].dropout, r["best_epoch"]),
    )
    best = dataclasses.replace(winner["config"], max_epochs=winner["best_epoch"])
    return best, records


def save_head(head: LinearHead, path: str | Path) -> None:
    """Persist as a fixed header plus little-endian f32 weights and bias."""
    kind = head.input_kind.encode("utf-8")
    name = head.trained_on.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(HEAD_MAGIC)
        fh.write(struct.pack("<BI", HEAD_VERSION, head.dim))
        fh.write(struct.pack("<H", len(kind)) + kind)
        fh.write(struct.pack("<H", len(name)) + name)
        fh.write(head.weights.astype("<f4").tobytes())
        fh.write(struct.pack("<f", head.bias))


def load_head(path: str | Path) -> LinearHead:
    blob = Path(path).read_bytes()
    if blob[:4] != HEAD_MAGIC:
        raise ValueError(f"{path}: not a linear-head file")
    version, dim = struct.unpack_from("<BI", blob, 4)
    if version != HEAD_VERSION:
        raise ValueError(f"{path}: unsupported head version {version}")
    pos = 9
    (kind_len,) = struct.unpack_from("<H", blob, pos)
    pos += 2
    input_kind = blob[pos : pos + kind_len].decode("utf-8")
    pos += kind_len
    (name_len,) = struct.unpack_from("<H", blob, pos)
    pos += 2
    trained_on = blob[pos : pos + name_len].decode("utf-8")
    pos += name_len
    weights = np.frombuffer(blob, dtype="<f4", count=dim, offset=pos).astype(np.float64)
    pos += 4 * dim
    (bias,) = struct.unpack_from("<f", blob, pos)
    return LinearHead(weights=weights, bias=float(bias), trained_on=trained_on, input_kind=input_kind)


class LogisticHead(BaseEstimator, ClassifierMixin):
    """sklearn-style front end for train_head/predict_proba.

    predict_proba follows the sklearn convention of returning (n, 2) columns
    ordered as classes_ = [0, 1].
    """

    def __init__(
        self,
        base_lr: float = 0.1,
        dropout: float = 0.0,
        weight_decay: float = 0.0,
        max_epochs: int = 4,
        batch_size: int = 32,
        seed: int = 0,
        l2: float | None = None,
    ):
        self.base_lr = base_lr
        self.dropout = dropout
        self.weight_decay = weight_decay
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.seed = seed
        self.l2 = l2

    def _config(self) -> TrainConfig:
        return TrainConfig(
            base_lr=self.base_lr,
            dropout=self.dropout,
            weight_decay=self.weight_decay,
            max_epochs=self.max_epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            l2=self.l2,
        )

    def fit(self, X, y, X_valid=None, y_valid=None):
        valid = (X_valid, y_valid) if X_valid is not None else None
        result = train_head(X, y, self._config(), valid=valid)
        self.head_ = result.head
        self.history_ = result.log
        self.best_epoch_ = result.best_epoch
        self.classes_ = np.array([0, 1])
        return self

    def _check_fitted(self) -> LinearHead:
        if not hasattr(self, "head_"):
            raise NotFittedError("LogisticHead must be fitted before prediction")
        return self.head_

    def decision_function(self, X) -> np.ndarray:
        return decision_scores(self._check_fitted(), X)

    def predict_proba(self, X) -> np.ndarray:
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0.0).astype(np.int64)
