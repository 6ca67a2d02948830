"""Benchmark the compiled kernels against the pure-numpy fallback.

Run as ``python -m scheda.bench`` (add ``--quick`` for smaller sizes).
Matrix products go through BLAS on both backends, so end-to-end
training differences come from the fused corruption/transfer/loss
kernels only.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import backend
from .corruption import CorruptionKind
from .dae import TrainConfig, train_da
from .datasets import synthetic_dataset


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def kernel_cases(quick: bool):
    scale = 4 if quick else 1
    n_uniform = 4_000_000 // scale
    rows, cols = 1000 // scale, 3072
    x = np.random.default_rng(0).uniform(size=(rows, cols))
    logits = np.random.default_rng(1).normal(size=(rows, cols))
    yield f"fill_uniform ({n_uniform:,})", lambda k: k.fill_uniform(7, 0, n_uniform)
    yield f"mask_corrupt ({rows}x{cols})", lambda k: k.mask_corrupt(x, 0.3, 7, 0)
    yield f"sigmoid ({rows}x{cols})", lambda k: k.sigmoid(logits)
    yield f"sigmoid_backward ({rows}x{cols})", lambda k: k.sigmoid_backward(logits, x)
    yield f"ce_logits_forward ({rows}x{cols})", lambda k: k.ce_logits_forward(x, logits)
    yield f"sq_sum ({rows}x{cols})", lambda k: k.sq_sum(x, logits)


def epoch_case(quick: bool):
    n, dim, hidden = (400, 256, 64) if quick else (2000, 512, 256)
    data = synthetic_dataset(n, dim, 4, seed=3).features
    cfg = TrainConfig(
        learning_rate=0.05,
        epochs=1,
        batch_size=20,
        loss="cross_entropy",
        corruption=CorruptionKind("masking", 0.3),
        seed=17,
        hidden_units=hidden,
    )
    return f"sgd epoch ({n}x{dim}, {hidden} hidden)", lambda: train_da(data, cfg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller sizes")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    backends = {"python": backend.load_backend("python")}
    try:
        backends["cython"] = backend.load_backend("cython")
    except ImportError:
        print("compiled backend unavailable; timing the python backend only")

    width = 44
    header = f"{'kernel':<{width}}" + "".join(f"{n:>12}" for n in backends) + (
        f"{'speedup':>10}" if len(backends) == 2 else ""
    )
    print(header)
    print("-" * len(header))
    for label, fn in kernel_cases(args.quick):
        times = [_time(lambda k=kern: fn(k), args.repeats) for kern in backends.values()]
        row = f"{label:<{width}}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.2f}x"
        print(row)

    label, fn = epoch_case(args.quick)
    times = []
    active = backend.backend_name()
    for name in backends:
        backend.set_backend(name)
        times.append(_time(fn, max(1, args.repeats - 1)))
    backend.set_backend(active)
    row = f"{label:<{width}}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
    if len(times) == 2:
        row += f"{times[0] / times[1]:>9.2f}x"
    print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
