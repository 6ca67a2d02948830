"""Pure-numpy implementations of the hot kernels.

This is the fallback backend; ``scheda._kernels`` is the compiled twin.
Both implement the same contract:

* ``fill_u64`` / ``fill_uniform`` / ``mask_corrupt`` are bit-identical
  across backends (integer arithmetic and exact float selection only).
* ``sigmoid`` and the loss reductions use the same formulas but may
  differ from the compiled backend by a few ulp (libm vs numpy
  transcendentals, sequential vs pairwise summation).

The generator is counter-based: draw ``k`` of the stream with key ``K``
is ``mix64(K + k * GOLDEN)`` where ``mix64`` is the splitmix64
finalizer. Uniform doubles are ``(bits >> 11) * 2**-53``, i.e. in
``[0, 1)``.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

# Sigmoid saturates to the closest representable doubles inside (0, 1).
_SIG_LO = np.nextafter(0.0, 1.0)
_SIG_HI = np.nextafter(1.0, 0.0)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def fill_u64(key: int, counter: int, n: int) -> np.ndarray:
    """Draws counter+1 .. counter+n of the stream keyed by ``key``."""
    idx = np.arange(1, n + 1, dtype=np.uint64) + np.uint64(counter & 0xFFFFFFFFFFFFFFFF)
    return _mix(idx * _GOLDEN + np.uint64(key & 0xFFFFFFFFFFFFFFFF))


def fill_uniform(key: int, counter: int, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    u = (fill_u64(key, counter, n) >> np.uint64(11)).astype(np.float64) * _INV53
    return lo + u * (hi - lo)


def mask_corrupt(x: np.ndarray, nu: float, key: int, counter: int) -> np.ndarray:
    """Zero each entry of ``x`` with probability ``nu``.

    Consumes exactly ``x.size`` draws in row-major order.
    """
    u = (fill_u64(key, counter, x.size) >> np.uint64(11)).astype(np.float64) * _INV53
    return np.where(u.reshape(x.shape) < nu, 0.0, x)


def sigmoid(v: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(v))
    out = np.where(v >= 0.0, 1.0, e) / (1.0 + e)
    return np.clip(out, _SIG_LO, _SIG_HI)


def sigmoid_backward(delta: np.ndarray, y: np.ndarray) -> np.ndarray:
    return delta * y * (1.0 - y)


def relu(v: np.ndarray) -> np.ndarray:
    return np.maximum(v, 0.0)


def relu_backward(delta: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.where(y > 0.0, delta, 0.0)


def ce_logits_sum(x: np.ndarray, logits: np.ndarray) -> float:
    """Total cross entropy against sigmoid(logits), computed stably."""
    softplus = np.log1p(np.exp(-np.abs(logits))) + np.maximum(logits, 0.0)
    return float(np.sum(softplus - x * logits))


def ce_logits_forward(x: np.ndarray, logits: np.ndarray):
    """Fused (total cross entropy, sigmoid(logits)): shares the exp."""
    e = np.exp(-np.abs(logits))
    z = np.clip(np.where(logits >= 0.0, 1.0, e) / (1.0 + e), _SIG_LO, _SIG_HI)
    total = float(np.sum(np.log1p(e) + np.maximum(logits, 0.0) - x * logits))
    return total, z


def ce_sum(x: np.ndarray, z: np.ndarray) -> float:
    return float(-np.sum(x * np.log(z) + (1.0 - x) * np.log1p(-z)))


def sq_sum(x: np.ndarray, z: np.ndarray) -> float:
    d = x - z
    return float(np.sum(d * d))
