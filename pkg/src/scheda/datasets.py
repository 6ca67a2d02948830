"""Dataset containers, file loaders, and synthetic generators.

Features are always float64 in [0, 1], one example per row. Loaders
return datasets without splits; ``split`` assigns deterministic
train/validation indices over whatever is not already held out as test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dae import STREAM_SPLIT
from .errors import FormatError
from .numerics import Rng

CIFAR_RECORD = 3073  # 1 label byte + 32*32 pixels * 3 channel planes
CIFAR_CLASSES = 10

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass
class LabeledDataset:
    features: np.ndarray  # (n, d) float64 in [0, 1]
    labels: np.ndarray  # (n,) int64
    train_idx: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    valid_idx: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    test_idx: np.ndarray = field(default_factory=lambda: _EMPTY.copy())

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("features must be 2-D and labels 1-D")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels disagree on example count")
        if self.labels.size and self.labels.min() < 0:
            raise ValueError("labels must be nonnegative")
        splits = [np.asarray(s, dtype=np.int64) for s in (self.train_idx, self.valid_idx, self.test_idx)]
        self.train_idx, self.valid_idx, self.test_idx = splits
        joined = np.concatenate(splits)
        if joined.size:
            if joined.min() < 0 or joined.max() >= self.n:
                raise ValueError("split index out of range")
            if np.unique(joined).size != joined.size:
                raise ValueError("split lists overlap")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def subset(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = {"train": self.train_idx, "valid": self.valid_idx, "test": self.test_idx}[name]
        return self.features[idx], self.labels[idx]


def load_cifar10(paths: list) -> LabeledDataset:
    """Read binary batches of 3073-byte records (label + RGB planes).

    Pixels are scaled by 1/255 into [0, 1]; the plane order of the file
    (all red, all green, all blue, each row-major) is kept as-is.
    """
    features, labels = [], []
    for path in paths:
        raw = Path(path).read_bytes()
        if len(raw) % CIFAR_RECORD != 0:
            offset = (len(raw) // CIFAR_RECORD) * CIFAR_RECORD
            raise FormatError(
                f"{path}: truncated record starting at byte {offset} "
                f"(file has {len(raw)} bytes, records are {CIFAR_RECORD})"
            )
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        batch_labels = records[:, 0]
        bad = np.nonzero(batch_labels >= CIFAR_CLASSES)[0]
        if bad.size:
            raise FormatError(
                f"{path}: label {batch_labels[bad[0]]} out of range at byte "
                f"{int(bad[0]) * CIFAR_RECORD}"
            )
        features.append(records[:, 1:].astype(np.float64) / 255.0)
        labels.append(batch_labels.astype(np.int64))
    return LabeledDataset(np.vstack(features), np.concatenate(labels))


def load_bow(path, vocab_size: int) -> LabeledDataset:
    """Read sparse binary bag-of-words lines: "<label> <idx>:1 <idx>:1 ...".

    Indices are 1-based and must be strictly increasing within a line;
    labels are 0 or 1.
    """
    rows, labels = [], []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if fields[0] not in ("0", "1"):
                raise FormatError(f"{path}:{lineno}: label must be 0 or 1, got {fields[0]!r}")
            row = np.zeros(vocab_size)
            prev = 0
            for token in fields[1:]:
                try:
                    idx_s, val_s = token.split(":")
                    idx = int(idx_s)
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: malformed token {token!r}") from None
                if val_s != "1":
                    raise FormatError(f"{path}:{lineno}: value must be 1, got {token!r}")
                if idx <= prev:
                    raise FormatError(f"{path}:{lineno}: indices must be strictly increasing")
                if idx > vocab_size:
                    raise FormatError(
                        f"{path}:{lineno}: index {idx} exceeds vocabulary size {vocab_size}"
                    )
                row[idx - 1] = 1.0
                prev = idx
            rows.append(row)
            labels.append(int(fields[0]))
    return LabeledDataset(np.array(rows).reshape(len(rows), vocab_size), np.array(labels))


def split(ds: LabeledDataset, train_n: int, valid_n: int, seed: int) -> LabeledDataset:
    """Assign disjoint train/validation indices by a seeded shuffle.

    Examples already held out in ``ds.test_idx`` are untouched.
    """
    pool = np.setdiff1d(np.arange(ds.n, dtype=np.int64), ds.test_idx)
    if train_n + valid_n > pool.size:
        raise ValueError(
            f"requested {train_n}+{valid_n} examples, only {pool.size} available"
        )
    order = pool[Rng(seed).derive(STREAM_SPLIT).permutation(pool.size)]
    return LabeledDataset(
        ds.features,
        ds.labels,
        np.sort(order[:train_n]),
        np.sort(order[train_n : train_n + valid_n]),
        ds.test_idx,
    )


def merge_with_test(ds: LabeledDataset, test_ds: LabeledDataset) -> LabeledDataset:
    """Append ``test_ds`` and mark its examples as the test split."""
    if ds.dim != test_ds.dim:
        raise ValueError("feature widths differ")
    features = np.vstack([ds.features, test_ds.features])
    labels = np.concatenate([ds.labels, test_ds.labels])
    test_idx = np.arange(ds.n, ds.n + test_ds.n, dtype=np.int64)
    return LabeledDataset(features, labels, ds.train_idx, ds.valid_idx, test_idx)


def synthetic_dataset(
    n: int, dim: int, classes: int, seed: int, binary: bool = False
) -> LabeledDataset:
    """Small smooth-pattern classification data for tests and demos.

    Each class is a sinusoidal prototype over the feature axis; examples
    add a random phase jitter and uniform noise, clipped to [0, 1].
    """
    rng = Rng(seed)
    t = np.arange(dim) / dim
    labels = np.arange(n, dtype=np.int64) % classes
    phases = rng.uniform(0.0, 2.0 * math.pi, classes)
    jitter = rng.uniform(-0.4, 0.4, n)
    noise = rng.uniform(-0.12, 0.12, n * dim).reshape(n, dim)
    freq = 1.0 + labels
    wave = np.sin(
        2.0 * math.pi * freq[:, None] * t[None, :] + phases[labels][:, None] + jitter[:, None]
    )
    features = np.clip(0.5 + 0.35 * wave + noise, 0.0, 1.0)
    if binary:
        features = (features > 0.5).astype(np.float64)
    return LabeledDataset(features, labels)


def synthetic_bow(n: int, vocab: int, seed: int) -> LabeledDataset:
    """Binary bag-of-words data with two planted word distributions."""
    rng = Rng(seed)
    base = rng.uniform(0.02, 0.25, vocab)
    shift = rng.uniform(0.0, 0.35, vocab)
    half = vocab // 2
    p0, p1 = base.copy(), base.copy()
    p0[:half] += shift[:half]
    p1[half:] += shift[half:]
    labels = np.arange(n, dtype=np.int64) % 2
    probs = np.where(labels[:, None] == 0, p0[None, :], p1[None, :])
    draws = rng.uniform(n=n * vocab).reshape(n, vocab)
    return LabeledDataset((draws < probs).astype(np.float64), labels)


def surrogate_images(
    n: int, seed: int, side: int = 32, classes: int = 10
) -> LabeledDataset:
    """Procedural texture images with class structure at two scales.

    Each class pairs a coarse grating orientation with a (decorrelated)
    fine one; every example draws random phases, a random window for
    the fine texture, and per-channel gains. Random phase keeps class
    means flat, so raw pixels are nearly useless to a linear classifier,
    while oriented features at either scale are informative. Stands in
    for natural image data when none is available; feature layout
    matches the binary-batch convention (R plane, G plane, B plane).
    """
    rng = Rng(seed)
    t = np.arange(side) / side
    yy, xx = np.meshgrid(t, t, indexing="ij")
    labels = np.arange(n, dtype=np.int64) % classes

    coarse_angle = math.pi * np.arange(classes) / classes
    fine_angle = math.pi * ((3 * np.arange(classes)) % classes) / classes + math.pi / (2 * classes)
    f_lo, f_hi = 1.5, 6.0

    coarse_u = np.einsum("c,ij->cij", np.cos(coarse_angle), xx) + np.einsum(
        "c,ij->cij", np.sin(coarse_angle), yy
    )
    fine_u = np.einsum("c,ij->cij", np.cos(fine_angle), xx) + np.einsum(
        "c,ij->cij", np.sin(fine_angle), yy
    )

    window = side // 2
    alpha = rng.uniform(0.0, 2.0 * math.pi, n)
    beta = rng.uniform(0.0, 2.0 * math.pi, n)
    corners = (rng.raw(2 * n) % (side - window)).astype(np.int64).reshape(n, 2)
    gains = rng.uniform(0.7, 1.0, 3 * n).reshape(n, 3)
    noise = rng.uniform(-0.06, 0.06, n * 3 * side * side).reshape(n, 3, side, side)

    features = np.empty((n, 3 * side * side))
    for i in range(n):
        c = labels[i]
        pattern = np.cos(2.0 * math.pi * f_lo * coarse_u[c] + alpha[i])
        r0, c0 = int(corners[i, 0]), int(corners[i, 1])
        fine = np.cos(2.0 * math.pi * f_hi * fine_u[c] + beta[i])
        pattern = pattern.copy()
        pattern[r0 : r0 + window, c0 : c0 + window] += 1.2 * fine[r0 : r0 + window, c0 : c0 + window]
        img = 0.5 + 0.2 * gains[i][:, None, None] * pattern[None, :, :] + noise[i]
        features[i] = np.clip(img, 0.0, 1.0).reshape(-1)
    return LabeledDataset(features, labels)
