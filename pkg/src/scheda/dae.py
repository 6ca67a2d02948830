"""Tied-weight denoising autoencoder: forward passes, losses, exact
gradients, and the minibatch SGD training loop.

Conventions
-----------
Data is row-major: one example per row. The encoder computes
``hidden = s(x @ W.T + enc_bias)`` with ``W`` of shape
(hidden, visible); the decoder reuses the transpose of the same matrix,
``recon = t(hidden @ W + dec_bias)``. Gradients are of the mean
per-example loss over the batch, so duplicating every example leaves
them unchanged.

Randomness is consumed from explicit ``Rng`` streams. ``train_da``
derives its streams from ``TrainConfig.seed``: label STREAM_INIT for
weight initialization, STREAM_TRAIN for shuffling and corruption. Every
epoch consumes, in order: one raw draw per example (shuffle keys), then
one uniform per corrupted entry, minibatch by minibatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import backend
from .corruption import KINDS, CorruptionKind, corrupt
from .errors import NumericalError, ShapeError
from .numerics import Rng, as_matrix

ENC_TRANSFERS = ("sigmoid", "relu")
DEC_TRANSFERS = ("sigmoid", "identity")
LOSSES = ("cross_entropy", "squared_error")

STREAM_INIT = 1
STREAM_TRAIN = 2
STREAM_SCHEDULE = 3
STREAM_NU = 4
STREAM_SPLIT = 5
STREAM_GRID = 6
STREAM_FINETUNE = 7


@dataclass
class DaeParams:
    """Autoencoder parameters with a tied decoder.

    The decoder weight matrix is always ``weights.T``; only ``weights``,
    the encoder bias, and the decoder bias are stored.
    """

    weights: np.ndarray  # (hidden, visible)
    enc_bias: np.ndarray  # (hidden,)
    dec_bias: np.ndarray  # (visible,)
    enc_transfer: str = "sigmoid"
    dec_transfer: str = "sigmoid"

    def __post_init__(self):
        if self.enc_transfer not in ENC_TRANSFERS:
            raise ValueError(f"unsupported encoder transfer {self.enc_transfer!r}")
        if self.dec_transfer not in DEC_TRANSFERS:
            raise ValueError(f"unsupported decoder transfer {self.dec_transfer!r}")

    @property
    def visible(self) -> int:
        return self.weights.shape[1]

    @property
    def hidden(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "DaeParams":
        return DaeParams(
            self.weights.copy(),
            self.enc_bias.copy(),
            self.dec_bias.copy(),
            self.enc_transfer,
            self.dec_transfer,
        )


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one denoising-autoencoder training run."""

    learning_rate: float
    epochs: int
    batch_size: int
    loss: str
    corruption: CorruptionKind
    seed: int
    hidden_units: int
    enc_transfer: str = "sigmoid"
    dec_transfer: str = "sigmoid"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.corruption.kind not in KINDS:
            raise ValueError(f"unknown corruption kind {self.corruption.kind!r}")
        check_loss_transfer(self.loss, self.dec_transfer)


def check_loss_transfer(loss: str, dec_transfer: str) -> None:
    """Reject loss/decoder pairings the gradients do not support."""
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}")
    if dec_transfer not in DEC_TRANSFERS:
        raise ValueError(f"unsupported decoder transfer {dec_transfer!r}")
    if loss == "cross_entropy" and dec_transfer != "sigmoid":
        raise ValueError("cross_entropy requires a sigmoid decoder")


def init_weight_range(visible: int, hidden: int, enc_transfer: str) -> float:
    factor = 4.0 if enc_transfer == "sigmoid" else 2.0
    return factor * math.sqrt(6.0 / (visible + hidden))


def init_params(
    visible: int,
    hidden: int,
    rng: Rng,
    enc_transfer: str = "sigmoid",
    dec_transfer: str = "sigmoid",
) -> DaeParams:
    """Symmetric uniform weight initialization, zero biases."""
    r = init_weight_range(visible, hidden, enc_transfer)
    w = rng.uniform(-r, r, hidden * visible).reshape(hidden, visible)
    return DaeParams(
        w, np.zeros(hidden), np.zeros(visible), enc_transfer, dec_transfer
    )


def _transfer(name: str, pre: np.ndarray) -> np.ndarray:
    if name == "sigmoid":
        return backend.kernels.sigmoid(pre)
    if name == "relu":
        return backend.kernels.relu(pre)
    return pre  # identity


def _transfer_backward(name: str, delta: np.ndarray, out: np.ndarray) -> np.ndarray:
    if name == "sigmoid":
        return backend.kernels.sigmoid_backward(delta, out)
    if name == "relu":
        return backend.kernels.relu_backward(delta, out)
    return delta


def encode(params: DaeParams, x: np.ndarray) -> np.ndarray:
    """Hidden representation of each row of x."""
    x = as_matrix(x, "input")
    if x.shape[1] != params.visible:
        raise ShapeError(
            f"input has {x.shape[1]} columns, encoder expects {params.visible}"
        )
    return _transfer(params.enc_transfer, x @ params.weights.T + params.enc_bias)


def decode(params: DaeParams, y: np.ndarray) -> np.ndarray:
    """Reconstruction from hidden activations."""
    y = as_matrix(y, "hidden activations")
    if y.shape[1] != params.hidden:
        raise ShapeError(
            f"hidden input has {y.shape[1]} columns, decoder expects {params.hidden}"
        )
    return _transfer(params.dec_transfer, y @ params.weights + params.dec_bias)


def _check_same_shape(x: np.ndarray, z: np.ndarray) -> None:
    if x.shape != z.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {z.shape}")


def cross_entropy(x: np.ndarray, z: np.ndarray) -> float:
    """Mean over examples of the summed binary cross entropy.

    ``z`` must lie strictly inside (0, 1); sigmoid outputs qualify.
    """
    x, z = as_matrix(x, "target"), as_matrix(z, "reconstruction")
    _check_same_shape(x, z)
    return backend.kernels.ce_sum(x, z) / x.shape[0]


def squared_error(x: np.ndarray, z: np.ndarray) -> float:
    """Mean over examples of the summed squared reconstruction error."""
    x, z = as_matrix(x, "target"), as_matrix(z, "reconstruction")
    _check_same_shape(x, z)
    return backend.kernels.sq_sum(x, z) / x.shape[0]


@dataclass
class DaeGrads:
    weights: np.ndarray
    enc_bias: np.ndarray
    dec_bias: np.ndarray


def _loss_and_delta(x, dec_pre, loss: str, dec_transfer: str, n: int):
    """Mean batch loss and the gradient at the decoder pre-activation.

    With a sigmoid decoder and cross entropy this is the fused residual
    (z - x) / n, so no division by z(1-z) ever happens.
    """
    if loss == "cross_entropy":
        loss_sum, z = backend.kernels.ce_logits_forward(x, dec_pre)
        loss_value = loss_sum / n
        delta_out = (z - x) / n
    else:
        z = _transfer(dec_transfer, dec_pre)
        loss_value = backend.kernels.sq_sum(x, z) / n
        delta_out = _transfer_backward(dec_transfer, 2.0 * (z - x) / n, z)
    return loss_value, delta_out


def _forward_backward(params: DaeParams, x, x_noisy, loss: str):
    """Mean batch loss and its exact gradient.

    The tied weight matrix collects two terms: the decoder path
    (hidden.T @ delta_out) and the encoder path (delta_hidden.T @ x_noisy).
    """
    n = x.shape[0]
    w = params.weights
    enc_pre = x_noisy @ w.T + params.enc_bias
    hidden = _transfer(params.enc_transfer, enc_pre)
    dec_pre = hidden @ w + params.dec_bias
    loss_value, delta_out = _loss_and_delta(x, dec_pre, loss, params.dec_transfer, n)

    g_dec_bias = delta_out.sum(axis=0)
    g_weights = hidden.T @ delta_out
    delta_hidden = _transfer_backward(params.enc_transfer, delta_out @ w.T, hidden)
    g_weights += delta_hidden.T @ x_noisy
    g_enc_bias = delta_hidden.sum(axis=0)
    return loss_value, DaeGrads(g_weights, g_enc_bias, g_dec_bias)


def grad(params: DaeParams, x, x_noisy, loss: str) -> DaeGrads:
    """Exact gradient of the mean reconstruction loss for one batch."""
    check_loss_transfer(loss, params.dec_transfer)
    x = as_matrix(x, "clean batch")
    x_noisy = as_matrix(x_noisy, "corrupted batch")
    _check_same_shape(x, x_noisy)
    if x.shape[1] != params.visible:
        raise ShapeError(
            f"batch has {x.shape[1]} columns, model expects {params.visible}"
        )
    _, grads = _forward_backward(params, x, x_noisy, loss)
    return grads


def _apply_update(params: DaeParams, grads: DaeGrads, lr: float) -> None:
    params.weights -= lr * grads.weights
    params.enc_bias -= lr * grads.enc_bias
    params.dec_bias -= lr * grads.dec_bias


def sgd_epoch(
    params: DaeParams,
    data: np.ndarray,
    cfg: TrainConfig,
    rng: Rng,
    _level_fn=None,
) -> float:
    """One pass of minibatch SGD; mutates ``params`` in place.

    Shuffles the example order, corrupts every minibatch freshly, and
    returns the mean training loss at the corruption level(s) used this
    epoch, measured on each batch before its update. ``_level_fn``,
    when given, supplies a corruption level per minibatch index (used by
    per-minibatch level sampling).
    """
    data = as_matrix(data, "training data")
    n = data.shape[0]
    if n == 0:
        raise ValueError("training data is empty")
    if cfg.batch_size > n:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")
    if data.shape[1] != params.visible:
        raise ShapeError(
            f"data has {data.shape[1]} columns, model expects {params.visible}"
        )

    perm = rng.permutation(n)
    total = 0.0
    for batch_index, start in enumerate(range(0, n, cfg.batch_size)):
        idx = perm[start : start + cfg.batch_size]
        x = data[idx]
        noise = cfg.corruption
        if _level_fn is not None:
            noise = CorruptionKind(noise.kind, _level_fn(batch_index))
        x_noisy = corrupt(x, noise, rng)
        loss_value, grads = _forward_backward(params, x, x_noisy, cfg.loss)
        _apply_update(params, grads, cfg.learning_rate)
        total += loss_value * len(idx)

    epoch_loss = total / n
    if not math.isfinite(epoch_loss):
        raise NumericalError(f"non-finite training loss: {epoch_loss!r}")
    return epoch_loss


def train_da(
    data: np.ndarray,
    cfg: TrainConfig,
    params: DaeParams | None = None,
    rng: Rng | None = None,
) -> tuple[DaeParams, np.ndarray]:
    """Train a denoising autoencoder for cfg.epochs epochs.

    Returns the trained parameters and the per-epoch loss trace. Fresh
    parameters and streams are derived from cfg.seed unless supplied.
    """
    master = Rng(cfg.seed)
    if params is None:
        params = init_params(
            data.shape[1],
            cfg.hidden_units,
            master.derive(STREAM_INIT),
            cfg.enc_transfer,
            cfg.dec_transfer,
        )
    if rng is None:
        rng = master.derive(STREAM_TRAIN)
    trace = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        trace[epoch] = sgd_epoch(params, data, cfg, rng)
    return params, trace


def with_level(cfg: TrainConfig, level: float) -> TrainConfig:
    """Copy of cfg with the corruption level replaced."""
    return replace(cfg, corruption=CorruptionKind(cfg.corruption.kind, level))
