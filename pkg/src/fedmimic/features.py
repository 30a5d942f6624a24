"""Feature selection: binary logistic regression trained by full-batch
gradient descent, recursive feature elimination ranked by |weight|, and the
per-class top-k union used to mask the expanded feature matrix."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import AttackClass

log = logging.getLogger(__name__)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    lr: float
    epochs: int

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(X @ self.weights + self.bias)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


@dataclass
class FeatureRanking:
    per_class: dict[str, list[int]]          # class name -> top-k indices
    union_mask: list[int] = field(default_factory=list)

    @classmethod
    def from_per_class(cls, per_class: dict[str, list[int]]) -> "FeatureRanking":
        union = sorted(set().union(*per_class.values())) if per_class else []
        return cls(per_class=per_class, union_mask=union)


def fit_logreg(X: np.ndarray, y: np.ndarray, lr: float = 0.1,
               epochs: int = 200, seed: int = 0,
               sample_weights: np.ndarray | None = None) -> LogRegModel:
    """Full-batch gradient descent on the (optionally weighted) logistic loss.
    Weights start at zero, so the fit is deterministic regardless of seed."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"X shape {X.shape} does not match {y.shape[0]} labels")
    if X.shape[0] < 1:
        raise ValueError("empty training set")
    n = X.shape[0]
    if sample_weights is None:
        sw = np.full(n, 1.0 / n)
    else:
        sw = np.asarray(sample_weights, dtype=np.float64)
        sw = sw / sw.sum()
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(epochs):
        p = _sigmoid(X @ w + b)
        err = (p - y) * sw
        w -= lr * (X.T @ err)
        b -= lr * err.sum()
    return LogRegModel(w, b, lr, epochs)


def inverse_frequency_weights(y: np.ndarray) -> np.ndarray:
    """Per-sample weights balancing positives and negatives; all-same-label
    targets degrade to uniform weights."""
    y = np.asarray(y)
    n_pos = int((y == 1).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return np.ones(len(y))
    w = np.where(y == 1, 0.5 / n_pos, 0.5 / n_neg)
    return w * len(y)


def rfe(X: np.ndarray, y: np.ndarray, target_k: int = 20, step: int = 5,
        lr: float = 0.1, epochs: int = 200, seed: int = 0,
        balance: bool = True) -> list[int]:
    """Recursive feature elimination: refit logistic regression on the
    surviving columns, drop the `step` smallest-|weight| features, repeat
    until target_k remain. Returns survivors in original-index order."""
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    if target_k > d:
        raise ValueError(f"target_k={target_k} exceeds {d} features")
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    remaining = list(range(d))
    sw = inverse_frequency_weights(y) if balance else None
    while len(remaining) > target_k:
        model = fit_logreg(X[:, remaining], y, lr=lr, epochs=epochs, seed=seed,
                           sample_weights=sw)
        drop = min(step, len(remaining) - target_k)
        # smallest |weight| first; ties resolve to the lower original index
        order = np.argsort(np.abs(model.weights), kind="stable")
        dead = sorted(order[:drop], reverse=True)
        for pos in dead:
            remaining.pop(int(pos))
    return remaining


def select_union(X: np.ndarray, labels: np.ndarray, k: int = 20,
                 step: int = 5, lr: float = 0.1, epochs: int = 200,
                 seed: int = 0, balance: bool = True) -> FeatureRanking:
    """One-vs-rest RFE per attack class; the mask is the sorted union of the
    five top-k lists."""
    labels = np.asarray(labels)
    per_class = {}
    for cls in AttackClass:
        target = (labels == cls).astype(np.int64)
        if target.sum() == 0:
            log.warning("class %s absent from labels; RFE runs on an all-zero "
                        "target", cls.name)
        per_class[cls.name] = rfe(X, target, target_k=k, step=step, lr=lr,
                                  epochs=epochs, seed=seed, balance=balance)
    return FeatureRanking.from_per_class(per_class)
