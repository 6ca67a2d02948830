"""Autoencoder with hidden units partitioned across noise levels.

Each partition owns its weight block, encoder bias, and noise level;
every partition sees its own corruption of the same input. Decoding
sums the tied per-partition reconstructions under one shared decoder
bias. With a single partition everything reduces exactly to the plain
denoising autoencoder, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corruption import CorruptionKind, corrupt
from .dae import (
    STREAM_TRAIN,
    TrainConfig,
    _loss_and_delta,
    _transfer,
    _transfer_backward,
    check_loss_transfer,
    init_weight_range,
    ENC_TRANSFERS,
    DEC_TRANSFERS,
)
from .errors import NumericalError, ShapeError
from .numerics import Rng, as_matrix

UPDATE_MODES = ("joint", "alternating")


@dataclass
class Partition:
    weights: np.ndarray  # (hidden_s, visible)
    bias: np.ndarray  # (hidden_s,)
    level: float

    def copy(self) -> "Partition":
        return Partition(self.weights.copy(), self.bias.copy(), self.level)


@dataclass
class CompositeParams:
    partitions: list[Partition]
    dec_bias: np.ndarray  # (visible,)
    enc_transfer: str = "sigmoid"
    dec_transfer: str = "sigmoid"

    def __post_init__(self):
        if not self.partitions:
            raise ValueError("at least one partition is required")
        if self.enc_transfer not in ENC_TRANSFERS:
            raise ValueError(f"unsupported encoder transfer {self.enc_transfer!r}")
        if self.dec_transfer not in DEC_TRANSFERS:
            raise ValueError(f"unsupported decoder transfer {self.dec_transfer!r}")
        widths = {p.weights.shape[1] for p in self.partitions}
        if len(widths) != 1 or widths != {self.dec_bias.shape[0]}:
            raise ShapeError("partitions disagree on the visible width")
        for p in self.partitions:
            if not 0.0 <= p.level <= 1.0:
                raise ValueError(f"partition level outside [0, 1]: {p.level}")

    @property
    def visible(self) -> int:
        return self.dec_bias.shape[0]

    @property
    def hidden_sizes(self) -> list[int]:
        return [p.weights.shape[0] for p in self.partitions]

    @property
    def total_hidden(self) -> int:
        return sum(self.hidden_sizes)

    def copy(self) -> "CompositeParams":
        return CompositeParams(
            [p.copy() for p in self.partitions],
            self.dec_bias.copy(),
            self.enc_transfer,
            self.dec_transfer,
        )


def init_composite(
    visible: int,
    hidden_sizes: list[int],
    levels: list[float],
    rng: Rng,
    enc_transfer: str = "sigmoid",
    dec_transfer: str = "sigmoid",
) -> CompositeParams:
    """Initialize partitions in order from one stream.

    A single partition draws exactly the same weights as init_params
    with the same stream.
    """
    if len(hidden_sizes) != len(levels):
        raise ValueError("hidden_sizes and levels must have equal length")
    partitions = []
    for hidden, level in zip(hidden_sizes, levels):
        r = init_weight_range(visible, hidden, enc_transfer)
        w = rng.uniform(-r, r, hidden * visible).reshape(hidden, visible)
        partitions.append(Partition(w, np.zeros(hidden), level))
    return CompositeParams(partitions, np.zeros(visible), enc_transfer, dec_transfer)


def _check_views(params: CompositeParams, views: list[np.ndarray]) -> list[np.ndarray]:
    if len(views) != len(params.partitions):
        raise ValueError(
            f"expected {len(params.partitions)} corrupted views, got {len(views)}"
        )
    views = [as_matrix(v, f"view {s}") for s, v in enumerate(views)]
    rows = {v.shape[0] for v in views}
    if len(rows) != 1:
        raise ShapeError(f"views disagree on row count: {sorted(rows)}")
    for s, v in enumerate(views):
        if v.shape[1] != params.visible:
            raise ShapeError(
                f"view {s} has {v.shape[1]} columns, model expects {params.visible}"
            )
    return views


def _encode_blocks(params: CompositeParams, views: list[np.ndarray]) -> list[np.ndarray]:
    return [
        _transfer(params.enc_transfer, v @ p.weights.T + p.bias)
        for p, v in zip(params.partitions, views)
    ]


def composite_encode(params: CompositeParams, views: list[np.ndarray]) -> np.ndarray:
    """Concatenated per-partition encodings, partition order preserved.

    ``views`` holds one corrupted copy of the input per partition (pass
    the clean input for every view to extract features).
    """
    views = _check_views(params, views)
    return np.hstack(_encode_blocks(params, views))


def composite_decode(params: CompositeParams, hidden_blocks: list[np.ndarray]) -> np.ndarray:
    """Reconstruction from per-partition hidden blocks."""
    if len(hidden_blocks) != len(params.partitions):
        raise ValueError(
            f"expected {len(params.partitions)} hidden blocks, got {len(hidden_blocks)}"
        )
    blocks = [as_matrix(h, f"hidden block {s}") for s, h in enumerate(hidden_blocks)]
    for s, (p, h) in enumerate(zip(params.partitions, blocks)):
        if h.shape[1] != p.weights.shape[0]:
            raise ShapeError(
                f"hidden block {s} has {h.shape[1]} columns, partition has "
                f"{p.weights.shape[0]} units"
            )
    dec_pre = blocks[0] @ params.partitions[0].weights
    for p, h in zip(params.partitions[1:], blocks[1:]):
        dec_pre += h @ p.weights
    dec_pre = dec_pre + params.dec_bias
    return _transfer(params.dec_transfer, dec_pre)


@dataclass
class CompositeGrads:
    partitions: list[tuple[np.ndarray, np.ndarray]]  # (d_weights, d_bias) per partition
    dec_bias: np.ndarray


def _forward_backward(
    params: CompositeParams,
    x: np.ndarray,
    views: list[np.ndarray],
    loss: str,
    active: list[int],
):
    """Loss and gradients for the partitions listed in ``active``.

    Inactive partitions still shape the forward pass; their gradient
    slots are returned as None. The shared decoder bias gradient is
    always computed.
    """
    n = x.shape[0]
    hiddens = _encode_blocks(params, views)
    dec_pre = hiddens[0] @ params.partitions[0].weights
    for p, h in zip(params.partitions[1:], hiddens[1:]):
        dec_pre += h @ p.weights
    dec_pre = dec_pre + params.dec_bias
    loss_value, delta_out = _loss_and_delta(x, dec_pre, loss, params.dec_transfer, n)

    g_dec_bias = delta_out.sum(axis=0)
    part_grads: list[tuple[np.ndarray, np.ndarray] | None] = [None] * len(params.partitions)
    for s in active:
        p, h = params.partitions[s], hiddens[s]
        g_w = h.T @ delta_out
        delta_h = _transfer_backward(params.enc_transfer, delta_out @ p.weights.T, h)
        g_w += delta_h.T @ views[s]
        part_grads[s] = (g_w, delta_h.sum(axis=0))
    return loss_value, CompositeGrads(part_grads, g_dec_bias)


def composite_grad(
    params: CompositeParams, x: np.ndarray, views: list[np.ndarray], loss: str
) -> CompositeGrads:
    """Exact gradient of the mean loss for every partition plus dec_bias."""
    check_loss_transfer(loss, params.dec_transfer)
    x = as_matrix(x, "clean batch")
    views = _check_views(params, views)
    _, grads = _forward_backward(params, x, views, loss, list(range(len(params.partitions))))
    return grads


def train_composite(
    data: np.ndarray,
    params: CompositeParams,
    cfg: TrainConfig,
    update_mode: str = "joint",
    phase_epochs: int = 50,
    rng: Rng | None = None,
) -> tuple[CompositeParams, np.ndarray]:
    """Train a partitioned autoencoder for cfg.epochs epochs.

    Every minibatch is corrupted once per partition, at that partition's
    level, in partition order from one stream. ``joint`` updates all
    partitions each step; ``alternating`` cycles the updated partition
    every ``phase_epochs`` epochs. The shared decoder bias is updated in
    every mode and phase. Returns a trained copy plus the loss trace.
    """
    if update_mode not in UPDATE_MODES:
        raise ValueError(f"unknown update mode {update_mode!r}")
    if phase_epochs < 1:
        raise ValueError("phase_epochs must be >= 1")
    check_loss_transfer(cfg.loss, params.dec_transfer)
    data = as_matrix(data, "training data")
    n = data.shape[0]
    if n == 0:
        raise ValueError("training data is empty")
    if cfg.batch_size > n:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")

    params = params.copy()
    count = len(params.partitions)
    if rng is None:
        rng = Rng(cfg.seed).derive(STREAM_TRAIN)
    lr = cfg.learning_rate
    trace = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        if update_mode == "joint":
            active = list(range(count))
        else:
            active = [(epoch // phase_epochs) % count]
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            x = data[idx]
            views = [
                corrupt(x, CorruptionKind(cfg.corruption.kind, p.level), rng)
                for p in params.partitions
            ]
            loss_value, grads = _forward_backward(params, x, views, cfg.loss, active)
            for s in active:
                g_w, g_b = grads.partitions[s]
                params.partitions[s].weights -= lr * g_w
                params.partitions[s].bias -= lr * g_b
            params.dec_bias -= lr * grads.dec_bias
            total += loss_value * len(idx)
        trace[epoch] = total / n
        if not math.isfinite(trace[epoch]):
            raise NumericalError(f"non-finite training loss: {trace[epoch]!r}")
    return params, trace
