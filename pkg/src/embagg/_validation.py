"""Input validation helpers shared by the estimators and functional ops."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError


def check_features(X, *, dim: int | None = None):
    """Coerce X to a 2-D float64 ndarray or CSR matrix; check the column count."""
    if sp.issparse(X):
        X = X.tocsr()
        if X.dtype != np.float64:
            X = X.astype(np.float64)
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2:
            raise ShapeError(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    if dim is not None and X.shape[1] != dim:
        raise ShapeError(f"feature dimension {X.shape[1]} does not match expected {dim}")
    return X


def check_binary_labels(y, *, n: int | None = None) -> np.ndarray:
    """Coerce labels to an int array and require every value to be 0 or 1."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got ndim={y.ndim}")
    if n is not None and y.shape[0] != n:
        raise ShapeError(f"{y.shape[0]} labels for {n} samples")
    y = y.astype(np.int64)
    if y.size and not np.isin(y, (0, 1)).all():
        bad = y[~np.isin(y, (0, 1))][0]
        raise ValueError(f"labels must be binary 0/1, found {bad}")
    return y


def check_vector(x, *, dim: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got ndim={x.ndim}")
    if dim is not None and x.shape[0] != dim:
        raise ShapeError(f"vector dimension {x.shape[0]} does not match expected {dim}")
    return x


def check_token_matrix(m) -> np.ndarray:
    """Coerce a token-embedding matrix to 2-D (positions x hidden)."""
    data = np.asarray(m)
    if data.ndim != 2:
        raise ShapeError(f"token-embedding matrix must be 2-D, got ndim={data.ndim}")
    if data.shape[0] < 1 or data.shape[1] < 1:
        raise ShapeError(f"token-embedding matrix must be non-empty, got shape {data.shape}")
    return data
