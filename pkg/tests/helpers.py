"""Shared test utilities: finite-difference oracles and random instances."""

import numpy as np

from scheda import DaeParams, Rng, cross_entropy, decode, encode, squared_error
from scheda.composite import CompositeParams, composite_decode, _encode_blocks


def reconstruction_loss(params: DaeParams, x, x_noisy, loss: str) -> float:
    """Forward-only loss used as the independent oracle for gradients."""
    z = decode(params, encode(params, x_noisy))
    return cross_entropy(x, z) if loss == "cross_entropy" else squared_error(x, z)


def composite_loss(params: CompositeParams, x, views, loss: str) -> float:
    z = composite_decode(params, _encode_blocks(params, views))
    return cross_entropy(x, z) if loss == "cross_entropy" else squared_error(x, z)


def fd_grad(loss_fn, array, step=1e-5):
    """Central finite differences of a scalar function over one array."""
    g = np.zeros_like(array)
    flat = array.ravel()
    gflat = g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = loss_fn()
        flat[i] = orig - step
        down = loss_fn()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return g


def rel_err(analytic, numeric):
    """Elementwise |a - n| / max(1, |a|, |n|), reduced to the maximum."""
    a, n = np.asarray(analytic), np.asarray(numeric)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float((np.abs(a - n) / scale).max())


def random_dae(rng: Rng, visible, hidden, enc="sigmoid", dec="sigmoid", scale=0.5):
    w = rng.uniform(-scale, scale, hidden * visible).reshape(hidden, visible)
    b = rng.uniform(-scale, scale, hidden)
    bp = rng.uniform(-scale, scale, visible)
    return DaeParams(w, b, bp, enc, dec)
