"""Input corruption processes for denoising training.

Masking noise zeroes each entry independently with probability nu;
Gaussian noise adds zero-mean noise of variance nu. Both draw fresh
randomness on every call, consuming one uniform per entry (two per
entry for Gaussian) from the supplied generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .numerics import Rng

KINDS = ("masking", "gaussian")


@dataclass(frozen=True)
class CorruptionKind:
    """A noise process: kind ('masking' or 'gaussian') plus level nu."""

    kind: str
    level: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown corruption kind {self.kind!r}")
        _check_level(self.kind, self.level)


def _check_level(kind: str, nu: float) -> None:
    if kind == "masking" and not 0.0 <= nu <= 1.0:
        raise ValueError(f"masking level must be in [0, 1], got {nu!r}")
    if kind == "gaussian" and not nu >= 0.0:
        raise ValueError(f"gaussian variance must be >= 0, got {nu!r}")


def mask_corrupt(x: np.ndarray, nu: float, rng: Rng) -> np.ndarray:
    """Zero each entry of x independently with probability nu.

    Entries are decided by one uniform draw each, in row-major order, so
    the corruption pattern is a pure function of the generator state.
    """
    _check_level("masking", nu)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = backend.kernels.mask_corrupt(x, nu, rng.key, rng.counter)
    rng.counter += x.size
    return out


def gaussian_corrupt(x: np.ndarray, nu: float, rng: Rng) -> np.ndarray:
    """Add independent zero-mean Gaussian noise of variance nu to x.

    Draws two uniforms per pair of entries (Box-Muller); no clipping.
    """
    _check_level("gaussian", nu)
    x = np.ascontiguousarray(x, dtype=np.float64)
    pairs = (x.size + 1) // 2
    u = rng.uniform(n=2 * pairs)
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(1.0 - u1))
    angle = (2.0 * np.pi) * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return x + np.sqrt(nu) * z[: x.size].reshape(x.shape)


def corrupt(x: np.ndarray, noise: CorruptionKind, rng: Rng) -> np.ndarray:
    """Apply the configured corruption process."""
    if noise.kind == "masking":
        return mask_corrupt(x, noise.level, rng)
    return gaussian_corrupt(x, noise.level, rng)
