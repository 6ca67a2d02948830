"""Binary checkpoint formats.

All integers are little-endian unsigned 64-bit, all reals little-endian
IEEE-754 doubles, all matrices row-major. Three magics:

* ``SDA1`` - tied autoencoder: d, hidden, encoder code, decoder code,
  then weights, encoder bias, decoder bias.
* ``SDC1`` - partitioned autoencoder: partition count, d, encoder code,
  decoder code, then per partition (hidden_s, level_s, weights_s,
  bias_s), then the shared decoder bias.
* ``SLR1`` - linear classifier: class count, feature count, the
  regularization strength, then weights and bias.

Transfer codes: 1 = sigmoid, 2 = relu, 3 = identity.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC_DAE = b"SDA1"
MAGIC_COMPOSITE = b"SDC1"
MAGIC_CLASSIFIER = b"SLR1"

TRANSFER_CODES = {"sigmoid": 1, "relu": 2, "identity": 3}
TRANSFER_NAMES = {v: k for k, v in TRANSFER_CODES.items()}


def _f64_bytes(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"{self.path}: truncated at byte {len(self.data)}, "
                f"needed {self.pos + n}"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def f64s(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        flat = np.frombuffer(self.take(8 * n), dtype="<f8")
        return flat.reshape(shape).astype(np.float64)

    def done(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(f"{self.path}: {len(self.data) - self.pos} trailing bytes")


def _transfer_code(name: str) -> int:
    return TRANSFER_CODES[name]


def _transfer_name(code: int, path) -> str:
    if code not in TRANSFER_NAMES:
        raise FormatError(f"{path}: unknown transfer code {code}")
    return TRANSFER_NAMES[code]


def save_dae(params, path) -> None:
    from .dae import DaeParams  # local import to avoid a cycle

    assert isinstance(params, DaeParams)
    with open(path, "wb") as f:
        f.write(MAGIC_DAE)
        f.write(
            struct.pack(
                "<4Q",
                params.visible,
                params.hidden,
                _transfer_code(params.enc_transfer),
                _transfer_code(params.dec_transfer),
            )
        )
        f.write(_f64_bytes(params.weights))
        f.write(_f64_bytes(params.enc_bias))
        f.write(_f64_bytes(params.dec_bias))


def load_dae(path):
    from .dae import DaeParams

    r = _Reader(Path(path).read_bytes(), path)
    if r.take(4) != MAGIC_DAE:
        raise FormatError(f"{path}: bad magic, expected SDA1")
    visible, hidden = r.u64(), r.u64()
    enc = _transfer_name(r.u64(), path)
    dec = _transfer_name(r.u64(), path)
    w = r.f64s((hidden, visible))
    b = r.f64s((hidden,))
    bp = r.f64s((visible,))
    r.done()
    return DaeParams(w, b, bp, enc, dec)


def save_composite(params, path) -> None:
    from .composite import CompositeParams

    assert isinstance(params, CompositeParams)
    with open(path, "wb") as f:
        f.write(MAGIC_COMPOSITE)
        f.write(
            struct.pack(
                "<4Q",
                len(params.partitions),
                params.visible,
                _transfer_code(params.enc_transfer),
                _transfer_code(params.dec_transfer),
            )
        )
        for part in params.partitions:
            f.write(struct.pack("<Q", part.weights.shape[0]))
            f.write(struct.pack("<d", part.level))
            f.write(_f64_bytes(part.weights))
            f.write(_f64_bytes(part.bias))
        f.write(_f64_bytes(params.dec_bias))


def load_composite(path):
    from .composite import CompositeParams, Partition

    r = _Reader(Path(path).read_bytes(), path)
    if r.take(4) != MAGIC_COMPOSITE:
        raise FormatError(f"{path}: bad magic, expected SDC1")
    count, visible = r.u64(), r.u64()
    enc = _transfer_name(r.u64(), path)
    dec = _transfer_name(r.u64(), path)
    partitions = []
    for _ in range(count):
        hidden = r.u64()
        level = r.f64()
        w = r.f64s((hidden, visible))
        b = r.f64s((hidden,))
        partitions.append(Partition(w, b, level))
    dec_bias = r.f64s((visible,))
    r.done()
    return CompositeParams(partitions, dec_bias, enc, dec)


def save_classifier(clf, path) -> None:
    from .evaluate import LinearClassifier

    assert isinstance(clf, LinearClassifier)
    with open(path, "wb") as f:
        f.write(MAGIC_CLASSIFIER)
        f.write(struct.pack("<2Q", clf.weights.shape[0], clf.weights.shape[1]))
        f.write(struct.pack("<d", clf.reg_strength))
        f.write(_f64_bytes(clf.weights))
        f.write(_f64_bytes(clf.bias))


def load_classifier(path):
    from .evaluate import LinearClassifier

    r = _Reader(Path(path).read_bytes(), path)
    if r.take(4) != MAGIC_CLASSIFIER:
        raise FormatError(f"{path}: bad magic, expected SLR1")
    classes, width = r.u64(), r.u64()
    reg = r.f64()
    w = r.f64s((classes, width))
    b = r.f64s((classes,))
    r.done()
    return LinearClassifier(w, b, reg)


def load_any(path):
    """Load whichever checkpoint type the magic announces."""
    with open(path, "rb") as f:
        magic = f.read(4)
    if magic == MAGIC_DAE:
        return load_dae(path)
    if magic == MAGIC_COMPOSITE:
        return load_composite(path)
    if magic == MAGIC_CLASSIFIER:
        return load_classifier(path)
    raise FormatError(f"{path}: unknown magic {magic!r}")
