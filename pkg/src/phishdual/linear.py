"""L2-regularised binary logistic regression over sparse TF-IDF rows."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from ._seeding import make_rng
from .errors import DataError, ModelFormatError
from .tfidf import SparseVector, vectors_to_csr

FORMAT_VERSION = 1


@dataclass(frozen=True)
class LinearTrainConfig:
    learning_rate: float = 0.1
    epochs: int = 100
    l2_lambda: float = 1e-4
    tolerance: float = 1e-6
    seed: int = 0
    batch_size: int | None = 32  # None means full batch

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2_lambda < 0 or self.tolerance < 0:
            raise ValueError("l2_lambda and tolerance must be >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1 or None")


@dataclass(frozen=True)
class LogRegModel:
    weights: np.ndarray
    bias: float
    n_features: int
    loss_history: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if w.shape != (self.n_features,):
            raise ValueError(f"weights shape {w.shape} does not match n_features={self.n_features}")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "model_type": "logreg",
            "n_features": self.n_features,
            "bias": float(self.bias),
            "weights": _rle_encode(self.weights),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LogRegModel":
        if data.get("model_type") != "logreg" or data.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError("not a logreg model of a supported format_version")
        n = int(data["n_features"])
        return cls(_rle_decode(data["weights"], n), float(data["bias"]), n)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "LogRegModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _rle_encode(weights):
    # Runs of exact zeros become ["z", count]; everything else is stored verbatim.
    out = []
    zeros = 0
    for v in weights.tolist():
        if v == 0.0:
            zeros += 1
            continue
        if zeros:
            out.append(["z", zeros])
            zeros = 0
        out.append(v)
    if zeros:
        out.append(["z", zeros])
    return out


def _rle_decode(items, n):
    values = []
    for item in items:
        if isinstance(item, list):
            values.extend([0.0] * int(item[1]))
        else:
            values.append(float(item))
    if len(values) != n:
        raise ModelFormatError(f"decoded {len(values)} weights, expected {n}")
    return np.array(values)


def as_csr(X, n_features=None) -> sp.csr_matrix:
    """Accept a sparse matrix, a dense array (or nested lists) or a sequence of :class:`SparseVector`."""
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
        if n_features is not None and X.shape[1] != n_features:
            raise DataError(f"matrix has {X.shape[1]} columns, expected {n_features}")
        return X
    if isinstance(X, np.ndarray):
        if n_features is not None and X.shape[1] != n_features:
            raise DataError(f"matrix has {X.shape[1]} columns, expected {n_features}")
        return sp.csr_matrix(X, dtype=np.float64)
    X = list(X)
    if X and not isinstance(X[0], SparseVector):
        return as_csr(np.asarray(X, dtype=np.float64).reshape(len(X), -1), n_features)
    if n_features is None:
        n_features = 1 + max((int(v.indices.max()) for v in X if v.nnz), default=-1)
    try:
        return vectors_to_csr(X, n_features)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def regularized_loss(weights, bias, X, y, l2_lambda):
    """Mean cross-entropy plus ``l2_lambda / 2 * ||w||^2``."""
    z = X @ weights + bias
    ce = np.where(y == 1, np.logaddexp(0.0, -z), np.logaddexp(0.0, z))
    return float(ce.mean() + 0.5 * l2_lambda * np.dot(weights, weights))


def loss_gradient(weights, bias, X, y, l2_lambda):
    """Gradient of :func:`regularized_loss` with respect to ``(weights, bias)``."""
    residual = expit(X @ weights + bias) - y
    grad_w = X.T @ residual / X.shape[0] + l2_lambda * weights
    return np.asarray(grad_w).ravel(), float(residual.mean())


def train_logreg(X, y: Sequence[int], config: LinearTrainConfig = LinearTrainConfig(), n_features=None) -> LogRegModel:
    """Seeded-shuffle mini-batch gradient descent with loss-delta early stopping."""
    X = as_csr(X, n_features)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise DataError("need at least 2 training rows")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0/1")
    if np.unique(y).size < 2:
        raise DataError("both classes must be present to train")

    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    rng = make_rng(config.seed)
    batch = n if config.batch_size is None else config.batch_size
    lr = config.learning_rate
    lam = config.l2_lambda

    prev = regularized_loss(w, b, X, y, lam)
    history = [prev]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            rows = order[start:start + batch]
            gw, gb = loss_gradient(w, b, X[rows], y[rows], lam)
            w -= lr * gw
            b -= lr * gb
        cur = regularized_loss(w, b, X, y, lam)
        history.append(cur)
        if prev - cur < config.tolerance:
            break
        prev = cur
    return LogRegModel(w, float(b), d, tuple(history))


def _check_index(model, x: SparseVector):
    if x.nnz and (x.indices.max() >= model.n_features or x.indices.min() < 0):
        raise DataError(f"feature index out of range for a model with {model.n_features} features")


def predict_proba(model: LogRegModel, x: SparseVector) -> float:
    _check_index(model, x)
    z = float(np.dot(model.weights[x.indices], x.values)) + model.bias
    return float(expit(z))


def predict(model: LogRegModel, x: SparseVector, threshold: float = 0.5) -> int:
    """Positive iff probability >= threshold (ties count as phishing)."""
    return int(predict_proba(model, x) >= threshold)


def predict_proba_many(model: LogRegModel, X) -> np.ndarray:
    X = as_csr(X, model.n_features)
    return expit(X @ model.weights + model.bias)
