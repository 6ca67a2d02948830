"""Representation quality measurement.

Features are extracted from clean inputs, optionally concatenated
across models, and scored with L2-regularized multinomial logistic
regression trained by deterministic full-batch gradient descent with
backtracking line search. A supervised fine-tuning path trains the
encoder and a fresh softmax output layer jointly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .composite import CompositeParams, composite_encode
from .dae import (
    STREAM_FINETUNE,
    DaeParams,
    _transfer,
    _transfer_backward,
    encode,
)
from .errors import ShapeError
from .numerics import Rng, as_matrix

REG_GRID = tuple(10.0**k for k in range(-6, 3))


def extract(model, data: np.ndarray) -> np.ndarray:
    """Hidden representation of clean (uncorrupted) data."""
    data = as_matrix(data, "data")
    if isinstance(model, DaeParams):
        return encode(model, data)
    if isinstance(model, CompositeParams):
        return composite_encode(model, [data] * len(model.partitions))
    raise TypeError(f"cannot extract features from {type(model).__name__}")


def concat(r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
    """Columns of r1 followed by columns of r2."""
    r1, r2 = as_matrix(r1, "first block"), as_matrix(r2, "second block")
    if r1.shape[0] != r2.shape[0]:
        raise ShapeError(f"row counts differ: {r1.shape[0]} vs {r2.shape[0]}")
    return np.hstack([r1, r2])


@dataclass
class LinearClassifier:
    weights: np.ndarray  # (classes, features)
    bias: np.ndarray  # (classes,)
    reg_strength: float

    def __post_init__(self):
        if self.reg_strength <= 0:
            raise ValueError("reg_strength must be > 0")

    def logits(self, features: np.ndarray) -> np.ndarray:
        features = as_matrix(features, "features")
        if features.shape[1] != self.weights.shape[1]:
            raise ShapeError(
                f"features have width {features.shape[1]}, classifier expects "
                f"{self.weights.shape[1]}"
            )
        return features @ self.weights.T + self.bias


def _softmax_terms(weights, bias, x, labels):
    logits = x @ weights.T + bias
    peak = logits.max(axis=1, keepdims=True)
    logsum = peak + np.log(np.exp(logits - peak).sum(axis=1, keepdims=True))
    data_loss = float(np.mean(logsum[:, 0] - logits[np.arange(x.shape[0]), labels]))
    probs = np.exp(logits - logsum)
    return data_loss, probs


def logreg_objective(weights, bias, features, labels, reg: float) -> float:
    """Mean multinomial logistic loss plus (reg/2)*||weights||^2."""
    data_loss, _ = _softmax_terms(weights, bias, features, labels)
    return data_loss + 0.5 * reg * float(np.sum(weights * weights))


def _logreg_grad(weights, bias, x, labels, reg):
    data_loss, probs = _softmax_terms(weights, bias, x, labels)
    probs[np.arange(x.shape[0]), labels] -= 1.0
    probs /= x.shape[0]
    g_w = probs.T @ x + reg * weights
    g_b = probs.sum(axis=0)
    loss = data_loss + 0.5 * reg * float(np.sum(weights * weights))
    return loss, g_w, g_b


def train_logreg(
    features: np.ndarray,
    labels: np.ndarray,
    reg: float,
    init: tuple[np.ndarray, np.ndarray] | None = None,
    tol: float = 1e-5,
    max_iter: int = 2000,
) -> LinearClassifier:
    """Fit the softmax classifier by full-batch descent.

    Deterministic: zero (or given) start, Armijo backtracking, stop when
    the gradient max-norm falls below ``tol``. The bias is never
    regularized.
    """
    x = as_matrix(features, "features")
    labels = np.asarray(labels, dtype=np.int64)
    if reg <= 0:
        raise ValueError("regularization strength must be > 0")
    if np.unique(labels).size < 2:
        raise ValueError("training data contains a single class")
    classes = int(labels.max()) + 1
    if init is None:
        w = np.zeros((classes, x.shape[1]))
        b = np.zeros(classes)
    else:
        w, b = init[0].copy(), init[1].copy()

    step = 1.0
    loss, g_w, g_b = _logreg_grad(w, b, x, labels, reg)
    for _ in range(max_iter):
        if max(np.abs(g_w).max(), np.abs(g_b).max()) <= tol:
            break
        sq_norm = float(np.sum(g_w * g_w) + np.sum(g_b * g_b))
        while True:
            w_new = w - step * g_w
            b_new = b - step * g_b
            new_loss = logreg_objective(w_new, b_new, x, labels, reg)
            if new_loss <= loss - 1e-4 * step * sq_norm or step < 1e-20:
                break
            step *= 0.5
        w, b = w_new, b_new
        loss, g_w, g_b = _logreg_grad(w, b, x, labels, reg)
        step = min(step * 2.0, 1e6)
    return LinearClassifier(w, b, reg)


def predict(clf: LinearClassifier, features: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties go to the lowest class index."""
    return np.argmax(clf.logits(features), axis=1)


def error_rate(clf: LinearClassifier, features: np.ndarray, labels) -> float:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != features.shape[0]:
        raise ShapeError("features and labels disagree on example count")
    return float(np.mean(predict(clf, features) != labels))


def select_model(candidates: list):
    """Candidate with the lowest validation error; first wins ties.

    ``candidates`` holds (config, validation_error) pairs in canonical
    enumeration order.
    """
    if not candidates:
        raise ValueError("no candidates to select from")
    best = candidates[0]
    for cand in candidates[1:]:
        if cand[1] < best[1]:
            best = cand
    return best[0]


def select_classifier(
    features: np.ndarray,
    labels: np.ndarray,
    train_idx: np.ndarray,
    valid_idx: np.ndarray,
    reg_grid=REG_GRID,
) -> tuple[LinearClassifier, float, float]:
    """Fit one classifier per regularization value, keep the best.

    Returns (classifier, reg, validation error); the grid is enumerated
    in the order given and ties keep the earlier value. Consecutive fits
    are warm-started.
    """
    warm = None
    best = None
    for reg in reg_grid:
        clf = train_logreg(features[train_idx], labels[train_idx], reg, init=warm)
        warm = (clf.weights, clf.bias)
        err = error_rate(clf, features[valid_idx], labels[valid_idx])
        if best is None or err < best[2]:
            best = (clf, reg, err)
    return best


@dataclass
class FinetuneNet:
    """Single-hidden-layer classifier seeded from an encoder."""

    hidden_w: np.ndarray  # (hidden, visible)
    hidden_b: np.ndarray  # (hidden,)
    out_w: np.ndarray  # (classes, hidden)
    out_b: np.ndarray  # (classes,)
    enc_transfer: str = "sigmoid"

    def logits(self, x: np.ndarray) -> np.ndarray:
        h = _transfer(self.enc_transfer, x @ self.hidden_w.T + self.hidden_b)
        return h @ self.out_w.T + self.out_b

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(x), axis=1)

    def copy(self) -> "FinetuneNet":
        return FinetuneNet(
            self.hidden_w.copy(),
            self.hidden_b.copy(),
            self.out_w.copy(),
            self.out_b.copy(),
            self.enc_transfer,
        )


@dataclass
class FinetuneGrads:
    hidden_w: np.ndarray
    hidden_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray


def finetune_grad(net: FinetuneNet, x: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy loss and its exact gradient."""
    n = x.shape[0]
    h = _transfer(net.enc_transfer, x @ net.hidden_w.T + net.hidden_b)
    logits = h @ net.out_w.T + net.out_b
    peak = logits.max(axis=1, keepdims=True)
    logsum = peak + np.log(np.exp(logits - peak).sum(axis=1, keepdims=True))
    loss = float(np.mean(logsum[:, 0] - logits[np.arange(n), labels]))
    probs = np.exp(logits - logsum)
    probs[np.arange(n), labels] -= 1.0
    probs /= n
    g_out_w = probs.T @ h
    g_out_b = probs.sum(axis=0)
    delta_h = _transfer_backward(net.enc_transfer, probs @ net.out_w, h)
    g_hidden_w = delta_h.T @ x
    g_hidden_b = delta_h.sum(axis=0)
    return loss, FinetuneGrads(g_hidden_w, g_hidden_b, g_out_w, g_out_b)


@dataclass
class FinetuneResult:
    net: FinetuneNet  # after the last epoch
    best_net: FinetuneNet  # at the epoch with the lowest validation error
    best_epoch: int  # 0 = initialization
    train_loss: np.ndarray
    valid_error: np.ndarray


def finetune(
    params: DaeParams,
    ds,
    learning_rate: float,
    epochs: int,
    batch_size: int = 20,
    seed: int = 0,
    rng: Rng | None = None,
    freeze_hidden: bool = False,
) -> FinetuneResult:
    """Supervised training of encoder + new softmax output layer.

    The hidden layer starts from the encoder parameters; the output
    layer starts at zero. Minibatch SGD on the train split; validation
    error is measured after every epoch and the best snapshot kept.
    """
    if ds.train_idx.size == 0 or ds.valid_idx.size == 0:
        raise ValueError("dataset needs train and validation splits")
    classes = ds.n_classes
    net = FinetuneNet(
        params.weights.copy(),
        params.enc_bias.copy(),
        np.zeros((classes, params.hidden)),
        np.zeros(classes),
        params.enc_transfer,
    )
    if rng is None:
        rng = Rng(seed).derive(STREAM_FINETUNE)
    x_train, y_train = ds.subset("train")
    x_valid, y_valid = ds.subset("valid")

    def valid_error_of(candidate: FinetuneNet) -> float:
        return float(np.mean(candidate.predict(x_valid) != y_valid))

    best_net, best_err, best_epoch = net.copy(), valid_error_of(net), 0
    train_loss = np.empty(epochs)
    valid_error = np.empty(epochs)
    n = x_train.shape[0]
    for epoch in range(epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            loss, grads = finetune_grad(net, x_train[idx], y_train[idx])
            if not freeze_hidden:
                net.hidden_w -= learning_rate * grads.hidden_w
                net.hidden_b -= learning_rate * grads.hidden_b
            net.out_w -= learning_rate * grads.out_w
            net.out_b -= learning_rate * grads.out_b
            total += loss * len(idx)
        train_loss[epoch] = total / n
        valid_error[epoch] = valid_error_of(net)
        if valid_error[epoch] < best_err:
            best_net, best_err, best_epoch = net.copy(), valid_error[epoch], epoch + 1
    return FinetuneResult(net, best_net, best_epoch, train_loss, valid_error)
