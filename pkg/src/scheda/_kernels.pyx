# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Mirror of ``scheda._kernels_py``; see that module for the contract. The
RNG and masking kernels are bit-identical to the fallback. Transfer
functions and loss reductions use libm and sequential accumulation, so
they may differ from the numpy versions by a few ulp.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, log1p, nextafter
from libc.stdint cimport uint64_t

BACKEND_NAME = "cython"

cdef uint64_t _GOLDEN = <uint64_t>0x9E3779B97F4A7C15
cdef uint64_t _MIX1 = <uint64_t>0xBF58476D1CE4E5B9
cdef uint64_t _MIX2 = <uint64_t>0x94D049BB133111EB
cdef double _INV53 = 1.0 / 9007199254740992.0

cdef double _SIG_LO = nextafter(0.0, 1.0)
cdef double _SIG_HI = nextafter(1.0, 0.0)


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    return z ^ (z >> 31)


cdef inline uint64_t _draw(uint64_t key, uint64_t k) nogil:
    return _mix(k * _GOLDEN + key)


def fill_u64(key, counter, n):
    """Draws counter+1 .. counter+n of the stream keyed by ``key``."""
    cdef uint64_t k = <uint64_t>(key & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t c = <uint64_t>(counter & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t m = n
    out = np.empty(m, dtype=np.uint64)
    cdef uint64_t[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            ov[i] = _draw(k, c + 1 + <uint64_t>i)
    return out


def fill_uniform(key, counter, n, double lo=0.0, double hi=1.0):
    cdef uint64_t k = <uint64_t>(key & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t c = <uint64_t>(counter & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t m = n
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double span = hi - lo
    cdef double u
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            u = <double>(_draw(k, c + 1 + <uint64_t>i) >> 11) * _INV53
            ov[i] = lo + u * span
    return out


def mask_corrupt(x, double nu, key, counter):
    """Zero each entry of ``x`` with probability ``nu``.

    Consumes exactly ``x.size`` draws in row-major order.
    """
    cdef uint64_t k = <uint64_t>(key & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t c = <uint64_t>(counter & 0xFFFFFFFFFFFFFFFF)
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef double[::1] xv = x.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, m = xv.shape[0]
    cdef double u
    with nogil:
        for i in range(m):
            u = <double>(_draw(k, c + 1 + <uint64_t>i) >> 11) * _INV53
            ov[i] = 0.0 if u < nu else xv[i]
    return out


def sigmoid(v):
    v = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty_like(v)
    cdef double[::1] vv = v.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, m = vv.shape[0]
    cdef double e, s
    with nogil:
        for i in range(m):
            e = exp(-fabs(vv[i]))
            s = 1.0 / (1.0 + e) if vv[i] >= 0.0 else e / (1.0 + e)
            if s < _SIG_LO:
                s = _SIG_LO
            elif s > _SIG_HI:
                s = _SIG_HI
            ov[i] = s
    return out


def sigmoid_backward(delta, y):
    delta = np.ascontiguousarray(delta, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty_like(delta)
    cdef double[::1] dv = delta.reshape(-1)
    cdef double[::1] yv = y.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, m = dv.shape[0]
    with nogil:
        for i in range(m):
            ov[i] = dv[i] * yv[i] * (1.0 - yv[i])
    return out


def relu(v):
    v = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty_like(v)
    cdef double[::1] vv = v.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, m = vv.shape[0]
    with nogil:
        for i in range(m):
            ov[i] = vv[i] if vv[i] > 0.0 else 0.0
    return out


def relu_backward(delta, y):
    delta = np.ascontiguousarray(delta, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty_like(delta)
    cdef double[::1] dv = delta.reshape(-1)
    cdef double[::1] yv = y.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, m = dv.shape[0]
    with nogil:
        for i in range(m):
            ov[i] = dv[i] if yv[i] > 0.0 else 0.0
    return out


def ce_logits_sum(x, logits):
    """Total cross entropy against sigmoid(logits), computed stably."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    cdef double[::1] xv = x.reshape(-1)
    cdef double[::1] av = logits.reshape(-1)
    cdef Py_ssize_t i, m = xv.shape[0]
    cdef double total = 0.0, a, softplus
    with nogil:
        for i in range(m):
            a = av[i]
            softplus = log1p(exp(-fabs(a))) + (a if a > 0.0 else 0.0)
            total += softplus - xv[i] * a
    return total


def ce_logits_forward(x, logits):
    """Fused (total cross entropy, sigmoid(logits)): shares the exp."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    z = np.empty_like(logits)
    cdef double[::1] xv = x.reshape(-1)
    cdef double[::1] av = logits.reshape(-1)
    cdef double[::1] zv = z.reshape(-1)
    cdef Py_ssize_t i, m = xv.shape[0]
    cdef double total = 0.0, a, e, s
    with nogil:
        for i in range(m):
            a = av[i]
            e = exp(-fabs(a))
            s = (1.0 if a >= 0.0 else e) / (1.0 + e)
            if s < _SIG_LO:
                s = _SIG_LO
            elif s > _SIG_HI:
                s = _SIG_HI
            zv[i] = s
            total += log1p(e) + (a if a > 0.0 else 0.0) - xv[i] * a
    return total, z


def ce_sum(x, z):
    x = np.ascontiguousarray(x, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] xv = x.reshape(-1)
    cdef double[::1] zv = z.reshape(-1)
    cdef Py_ssize_t i, m = xv.shape[0]
    cdef double total = 0.0
    with nogil:
        for i in range(m):
            total += xv[i] * log(zv[i]) + (1.0 - xv[i]) * log1p(-zv[i])
    return -total


def sq_sum(x, z):
    x = np.ascontiguousarray(x, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] xv = x.reshape(-1)
    cdef double[::1] zv = z.reshape(-1)
    cdef Py_ssize_t i, m = xv.shape[0]
    cdef double total = 0.0, d
    with nogil:
        for i in range(m):
            d = xv[i] - zv[i]
            total += d * d
    return total
