"""Dense float64 numerics: shape-checked matmul, transfer functions,
and a deterministic counter-based random generator.

All matrices are 2-D C-contiguous float64 numpy arrays. Matrix products
go through BLAS (``numpy.dot``); elementwise kernels go through the
selected backend (see ``scheda.backend``).
"""

from __future__ import annotations

import numpy as np

from . import backend
from .errors import ShapeError

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """Splitmix64 finalizer on a 64-bit integer."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


class Rng:
    """Counter-based splitmix64 generator.

    Draw ``k`` (1-based) of the stream with key ``K`` is
    ``mix64(K + k * GOLDEN64)``, identical to the reference splitmix64
    sequence seeded with ``K``. Uniform doubles are
    ``(draw >> 11) * 2**-53``. The algorithm is fixed: the same seed
    yields the same draws in any build, on any backend.

    ``derive(label)`` returns an independent stream whose key is
    ``mix64(mix64(key ^ GOLDEN64) + label)``; it is a pure function of
    (key, label) and does not advance this generator.
    """

    __slots__ = ("key", "counter")

    def __init__(self, seed: int):
        self.key = seed & MASK64
        self.counter = 0

    def __repr__(self) -> str:
        return f"Rng(key={self.key:#x}, counter={self.counter})"

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` draws as uint64."""
        block = backend.kernels.fill_u64(self.key, self.counter, n)
        self.counter += n
        return block

    def uniform(self, lo: float = 0.0, hi: float = 1.0, n: int = 1) -> np.ndarray:
        """``n`` i.i.d. draws in ``[lo, hi)`` (all equal to lo when lo == hi)."""
        if lo > hi:
            raise ValueError(f"uniform bounds reversed: lo={lo!r} > hi={hi!r}")
        block = backend.kernels.fill_uniform(self.key, self.counter, n, lo, hi)
        self.counter += n
        return block

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n): argsort of n raw draws."""
        return np.argsort(self.raw(n), kind="stable")

    def integer(self, bound: int) -> int:
        """One draw in [0, bound) via modulo (bias < 2**-50 for our bounds)."""
        return int(self.raw(1)[0] % bound)

    def derive(self, label: int) -> "Rng":
        child = Rng.__new__(Rng)
        child.key = mix64(mix64(self.key ^ GOLDEN64) + (label & MASK64))
        child.counter = 0
        return child


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a 2-D C-contiguous float64 array."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}: inner dimensions differ")
    return a @ b


def sigmoid(v) -> np.ndarray:
    """Elementwise 1/(1+exp(-v)); output saturates inside (0, 1)."""
    return backend.kernels.sigmoid(np.asarray(v, dtype=np.float64))


def relu(v) -> np.ndarray:
    """Elementwise max(0, v)."""
    return backend.kernels.relu(np.asarray(v, dtype=np.float64))
