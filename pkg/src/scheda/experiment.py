"""Experiment orchestration: one ``run`` per config, grid sweeps, and
the metrics/checkpoint/manifest artifacts they leave on disk.

Artifacts per run directory:

* ``manifest.cfg`` - fully resolved config; replaying it reproduces the
  run byte for byte.
* ``metrics.csv`` - header ``epoch,noise_level,recon_error,valid_error,
  test_error``; validation/test cells are filled at the configured
  cadence and empty otherwise.
* ``model.ckpt`` - final parameters; scheduled runs also write
  ``model-nu<level>.ckpt`` after the last epoch at each level plus a
  ``schedule.manifest`` key=value summary.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import checkpoint
from .composite import init_composite
from .config import ExperimentConfig, resolved_manifest
from .dae import (
    STREAM_GRID,
    STREAM_INIT,
    STREAM_NU,
    STREAM_SCHEDULE,
    STREAM_TRAIN,
    init_params,
    sgd_epoch,
    with_level,
)
from .datasets import (
    LabeledDataset,
    load_bow,
    load_cifar10,
    merge_with_test,
    split,
    surrogate_images,
    synthetic_dataset,
)
from .errors import ConfigError
from .evaluate import error_rate, extract, select_classifier, select_model
from .numerics import Rng

log = logging.getLogger("scheda")


def build_dataset(cfg: ExperimentConfig) -> LabeledDataset:
    spec = cfg.dataset
    if spec.kind == "synthetic":
        ds = synthetic_dataset(spec.n, spec.dim, spec.classes, spec.seed, spec.binary)
    elif spec.kind == "surrogate":
        ds = surrogate_images(spec.n, spec.seed, side=spec.side, classes=spec.classes)
    elif spec.kind == "cifar10":
        ds = load_cifar10(list(spec.train_batches))
        if spec.test_batch:
            test = load_cifar10([spec.test_batch])
            if spec.test_n is not None:
                test = LabeledDataset(test.features[: spec.test_n], test.labels[: spec.test_n])
            ds = merge_with_test(ds, test)
    else:  # bow
        ds = load_bow(spec.path, spec.vocab)

    if spec.kind != "cifar10" and spec.test_n:
        # carve the test block off the end before assigning train/valid
        n = ds.n
        test_idx = np.arange(n - spec.test_n, n, dtype=np.int64)
        ds = LabeledDataset(ds.features, ds.labels, test_idx=test_idx)
    try:
        return split(ds, spec.train_n, spec.valid_n, spec.seed)
    except ValueError as exc:
        raise ConfigError(f"[dataset] {exc}") from None


class MetricsWriter:
    HEADER = "epoch,noise_level,recon_error,valid_error,test_error"

    def __init__(self, path):
        self.path = Path(path)
        self._file = open(self.path, "w", newline="")
        self._writer = csv.writer(self._file)
        self._writer.writerow(self.HEADER.split(","))

    def row(self, epoch: int, level, recon: float, valid=None, test=None):
        fmt = lambda v: "" if v is None else repr(float(v))
        level_cell = "" if level is None else f"{level:g}"
        self._writer.writerow([epoch, level_cell, repr(float(recon)), fmt(valid), fmt(test)])

    def close(self):
        self._file.close()


def _dense_early_offsets(offset: int) -> bool:
    # measurement epochs after a noise switch: 1, 3, 5, then every 10
    return offset in (1, 3, 5) or (offset > 5 and (offset - 5) % 10 == 0)


class _Evaluator:
    """Measures validation/test error of the current representation."""

    def __init__(self, cfg: ExperimentConfig, ds: LabeledDataset):
        self.cfg = cfg
        self.ds = ds
        if cfg.metrics_every > 0 and (ds.train_idx.size == 0 or ds.valid_idx.size == 0):
            raise ConfigError("metrics_every > 0 needs train and validation splits")

    def wants(self, epoch: int, epochs_since_switch: int | None) -> bool:
        if self.cfg.metrics_every <= 0:
            return False
        if self.cfg.dense_early and epochs_since_switch is not None:
            return _dense_early_offsets(epochs_since_switch)
        return epoch % self.cfg.metrics_every == 0

    def measure(self, model) -> tuple[float, float | None]:
        features = extract(model, self.ds.features)
        clf, _, valid_err = select_classifier(
            features, self.ds.labels, self.ds.train_idx, self.ds.valid_idx, self.cfg.reg_grid
        )
        test_err = None
        if self.ds.test_idx.size:
            test_err = error_rate(clf, features[self.ds.test_idx], self.ds.labels[self.ds.test_idx])
        return valid_err, test_err


def _run_da(cfg, data, metrics, evaluator, out):
    master = Rng(cfg.seed)
    params = init_params(
        data.shape[1], cfg.train.hidden_units, master.derive(STREAM_INIT),
        cfg.train.enc_transfer, cfg.train.dec_transfer,
    )
    rng = master.derive(STREAM_TRAIN)
    level = cfg.train.corruption.level
    for epoch in range(1, cfg.train.epochs + 1):
        loss = sgd_epoch(params, data, cfg.train, rng)
        valid = test = None
        if evaluator.wants(epoch, None):
            valid, test = evaluator.measure(params)
        metrics.row(epoch, level, loss, valid, test)
    checkpoint.save_dae(params, out / "model.ckpt")
    return params


def _run_scheda(cfg, data, metrics, evaluator, out):
    master = Rng(cfg.seed)
    sched = cfg.schedule
    if cfg.donor:
        params = checkpoint.load_dae(cfg.donor)
        epoch = 0
    else:
        params = init_params(
            data.shape[1], cfg.train.hidden_units, master.derive(STREAM_INIT),
            cfg.train.enc_transfer, cfg.train.dec_transfer,
        )
        rng0 = master.derive(STREAM_TRAIN)
        epoch = 0
        for _ in range(sched.initial_epochs):
            epoch += 1
            loss = sgd_epoch(params, data, cfg.train, rng0)
            valid = test = None
            if evaluator.wants(epoch, None):
                valid, test = evaluator.measure(params)
            metrics.row(epoch, sched.start, loss, valid, test)

    rng = master.derive(STREAM_SCHEDULE)
    for level in sched.levels()[1:]:
        level_cfg = with_level(cfg.train, level)
        for offset in range(1, sched.epochs_per_level + 1):
            epoch += 1
            loss = sgd_epoch(params, data, level_cfg, rng)
            valid = test = None
            if evaluator.wants(epoch, offset):
                valid, test = evaluator.measure(params)
            metrics.row(epoch, level, loss, valid, test)
        checkpoint.save_dae(params, out / f"model-nu{level:g}.ckpt")
    checkpoint.save_dae(params, out / "model.ckpt")

    manifest = out / "schedule.manifest"
    manifest.write_text(
        f"nu0={sched.start:g}\ndelta_nu={sched.step:g}\nswitches={sched.switches}\n"
        f"epochs_per_level={sched.epochs_per_level}\nseed={cfg.seed}\n"
    )
    return params


def _run_sampled(cfg, data, metrics, evaluator, out):
    master = Rng(cfg.seed)
    params = init_params(
        data.shape[1], cfg.train.hidden_units, master.derive(STREAM_INIT),
        cfg.train.enc_transfer, cfg.train.dec_transfer,
    )
    rng = master.derive(STREAM_TRAIN)
    nu_rng = master.derive(STREAM_NU)
    spec = cfg.sampled
    for epoch in range(1, cfg.train.epochs + 1):
        drawn = []

        def draw(_i):
            drawn.append(spec.draw(nu_rng))
            return drawn[-1]

        loss = sgd_epoch(params, data, cfg.train, rng, _level_fn=draw)
        valid = test = None
        if evaluator.wants(epoch, None):
            valid, test = evaluator.measure(params)
        metrics.row(epoch, float(np.mean(drawn)), loss, valid, test)
    checkpoint.save_dae(params, out / "model.ckpt")
    return params


def _run_composite(cfg, data, metrics, evaluator, out):
    master = Rng(cfg.seed)
    spec = cfg.composite
    params = init_composite(
        data.shape[1], list(spec.hidden_sizes), list(spec.levels),
        master.derive(STREAM_INIT), cfg.train.enc_transfer, cfg.train.dec_transfer,
    )
    if cfg.train.epochs:
        # epoch-by-epoch so metrics can be logged; arithmetic and stream
        # layout match train_composite exactly
        rng = master.derive(STREAM_TRAIN)
        count = len(spec.hidden_sizes)
        for epoch in range(cfg.train.epochs):
            if spec.update_mode == "joint":
                active = list(range(count))
            else:
                active = [(epoch // spec.phase_epochs) % count]
            loss = _composite_epoch(data, params, cfg.train, active, rng)
            valid = test = None
            if evaluator.wants(epoch + 1, None):
                valid, test = evaluator.measure(params)
            metrics.row(epoch + 1, None, loss, valid, test)
    checkpoint.save_composite(params, out / "model.ckpt")
    return params


def _composite_epoch(data, params, cfg, active, rng):
    """One in-place epoch over a partitioned model; returns the mean loss."""
    from .composite import _forward_backward as composite_fb
    from .corruption import CorruptionKind, corrupt

    n = data.shape[0]
    perm = rng.permutation(n)
    total = 0.0
    for start in range(0, n, cfg.batch_size):
        idx = perm[start : start + cfg.batch_size]
        x = data[idx]
        views = [
            corrupt(x, CorruptionKind(cfg.corruption.kind, p.level), rng)
            for p in params.partitions
        ]
        loss_value, grads = composite_fb(params, x, views, cfg.loss, active)
        for s in active:
            g_w, g_b = grads.partitions[s]
            params.partitions[s].weights -= cfg.learning_rate * g_w
            params.partitions[s].bias -= cfg.learning_rate * g_b
        params.dec_bias -= cfg.learning_rate * grads.dec_bias
        total += loss_value * len(idx)
    return total / n


_RUNNERS = {
    "da": _run_da,
    "scheda": _run_scheda,
    "sampled": _run_sampled,
    "composite": _run_composite,
}


def run(cfg: ExperimentConfig) -> dict:
    """Train per config; write manifest, metrics, and checkpoints."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.cfg").write_text(resolved_manifest(cfg))
    ds = build_dataset(cfg)
    data = ds.features[ds.train_idx] if ds.train_idx.size else ds.features
    evaluator = _Evaluator(cfg, ds)
    metrics = MetricsWriter(out / "metrics.csv")
    log.info("run: model=%s seed=%d out=%s", cfg.model, cfg.seed, out)
    try:
        model = _RUNNERS[cfg.model](cfg, data, metrics, evaluator, out)
    finally:
        metrics.close()
    return {
        "out": out,
        "model": model,
        "checkpoint": out / "model.ckpt",
        "metrics": out / "metrics.csv",
        "manifest": out / "manifest.cfg",
        "dataset": ds,
    }


def grid_seed(master_seed: int, index: int) -> int:
    """Per-combo seed: derived, so results are order-independent."""
    return Rng(master_seed).derive(STREAM_GRID).derive(index).key


def _grid_worker(args):
    manifest_text, nu, lr, epochs, index = args
    from .config import parse_config

    cfg = parse_config(manifest_text)
    seed = grid_seed(cfg.seed, index)
    combo_train = replace(
        with_level(cfg.train, nu), learning_rate=lr, epochs=epochs, seed=seed
    )
    ds = build_dataset(cfg)
    data = ds.features[ds.train_idx]
    from .dae import train_da

    params, _ = train_da(data, combo_train)
    features = extract(params, ds.features)
    clf, reg, valid_err = select_classifier(
        features, ds.labels, ds.train_idx, ds.valid_idx, cfg.reg_grid
    )
    test_err = ""
    if ds.test_idx.size:
        test_err = error_rate(clf, features[ds.test_idx], ds.labels[ds.test_idx])
    return {
        "noise_level": nu,
        "learning_rate": lr,
        "epochs": epochs,
        "seed": seed,
        "reg": reg,
        "valid_error": valid_err,
        "test_error": test_err,
    }


def run_grid(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Evaluate every (noise, learning rate, epochs) combo of [grid].

    Combos run in canonical order (noise desc, lr asc, epochs asc) with
    order-independent derived seeds; the selection report picks the
    lowest validation error, earliest combo on ties.
    """
    if cfg.grid is None:
        raise ConfigError("grid run requires a [grid] section")
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.cfg").write_text(resolved_manifest(cfg))
    manifest_text = resolved_manifest(cfg)
    tasks = [
        (manifest_text, nu, lr, ep, i)
        for i, (nu, lr, ep) in enumerate(cfg.grid.combos())
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_grid_worker, tasks))
    else:
        results = [_grid_worker(t) for t in tasks]

    grid_csv = out / "grid.csv"
    with open(grid_csv, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["noise_level", "learning_rate", "epochs", "seed", "reg", "valid_error", "test_error"]
        )
        for row in results:
            writer.writerow(
                [
                    f"{row['noise_level']:g}",
                    f"{row['learning_rate']:g}",
                    row["epochs"],
                    row["seed"],
                    f"{row['reg']:g}",
                    repr(row["valid_error"]),
                    repr(row["test_error"]) if row["test_error"] != "" else "",
                ]
            )

    candidates = [
        ((row["noise_level"], row["learning_rate"], row["epochs"]), row["valid_error"])
        for row in results
    ]
    best = select_model(candidates)
    selection = out / "selection.txt"
    selection.write_text(
        f"noise_level={best[0]:g}\nlearning_rate={best[1]:g}\nepochs={best[2]}\n"
    )
    return {"out": out, "grid": grid_csv, "selection": selection, "results": results, "best": best}
