"""Command-line experiment harness.

Subcommands: train, eval, analyze, concat-eval, finetune, viz, grid.
Exit codes: 0 success, 2 config error, 3 data error, 4 numerical
failure. Set SCHEDA_LOG=debug|info|warning for log verbosity.
"""

from __future__ import annotations

import functools
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import checkpoint
from .analysis import activation_vectors, export_filters, match_counts, write_match_counts_csv
from .composite import CompositeParams
from .config import load_config
from .dae import DaeParams
from .errors import ConfigError, FormatError, NumericalError
from .evaluate import concat, error_rate, extract, finetune, select_classifier
from .experiment import build_dataset, run, run_grid

log = logging.getLogger("scheda")


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ValueError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except (FormatError, OSError) as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(3)
        except NumericalError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(4)

    return wrapper


def _config_options(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path(), help="experiment config file")(fn)
    fn = click.option("--seed", type=int, default=None, help="override [experiment] seed")(fn)
    fn = click.option("--out", type=click.Path(), default=None, help="override output directory")(fn)
    return fn


def _load(config_path, seed, out, metrics_every=None):
    return load_config(
        config_path,
        seed_override=seed,
        output_override=out,
        metrics_every_override=metrics_every,
    )


@click.group()
def main():
    """Denoising-autoencoder experiments with configurable noise schedules."""
    level = os.environ.get("SCHEDA_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_config_options
@click.option("--metrics-every", type=int, default=None, help="epochs between evaluations (0 = never)")
@_handle_errors
def train(config_path, seed, out, metrics_every):
    """Train the configured model; write checkpoints and metrics."""
    cfg = _load(config_path, seed, out, metrics_every)
    result = run(cfg)
    click.echo(f"checkpoint: {result['checkpoint']}")
    click.echo(f"metrics: {result['metrics']}")


@main.command("eval")
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path())
@_config_options
@_handle_errors
def eval_cmd(ckpt_path, config_path, seed, out):
    """Score a checkpoint's representation with logistic regression."""
    cfg = _load(config_path, seed, out)
    ds = build_dataset(cfg)
    model = checkpoint.load_any(ckpt_path)
    if not isinstance(model, (DaeParams, CompositeParams)):
        raise ConfigError(f"{ckpt_path} is not an autoencoder checkpoint")
    features = extract(model, ds.features)
    clf, reg, valid_err = select_classifier(
        features, ds.labels, ds.train_idx, ds.valid_idx, cfg.reg_grid
    )
    out_dir = Path(cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint.save_classifier(clf, out_dir / "classifier.ckpt")
    click.echo(f"representation width: {features.shape[1]}")
    click.echo(f"selected reg: {reg:g}")
    click.echo(f"validation error: {valid_err:.4f}")
    if ds.test_idx.size:
        test_err = error_rate(clf, features[ds.test_idx], ds.labels[ds.test_idx])
        click.echo(f"test error: {test_err:.4f}")


@main.command()
@click.option("--target", required=True, type=click.Path(), help="checkpoint under analysis")
@click.option("--reference", "references", required=True, multiple=True, type=click.Path())
@click.option("--split", "split_name", default="train", type=click.Choice(["train", "valid", "test"]))
@_config_options
@_handle_errors
def analyze(target, references, split_name, config_path, seed, out):
    """Count, per reference model, the target features nearest to it."""
    cfg = _load(config_path, seed, out)
    ds = build_dataset(cfg)
    data, _ = ds.subset(split_name)
    target_model = checkpoint.load_any(target)
    target_acts = activation_vectors(target_model, data, tag=Path(target).stem)
    refs = [
        activation_vectors(checkpoint.load_any(p), data, tag=Path(p).stem)
        for p in references
    ]
    counts = match_counts(target_acts, refs)
    out_dir = Path(cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "match_counts.csv"
    write_match_counts_csv([r.tag for r in refs], counts, csv_path)
    for ref, count in zip(refs, counts):
        click.echo(f"{ref.tag},{count}")
    click.echo(f"written: {csv_path}")


@main.command("concat-eval")
@click.option("--checkpoint-a", required=True, type=click.Path())
@click.option("--checkpoint-b", required=True, type=click.Path())
@_config_options
@_handle_errors
def concat_eval(checkpoint_a, checkpoint_b, config_path, seed, out):
    """Score the concatenation of two checkpoints' representations."""
    cfg = _load(config_path, seed, out)
    ds = build_dataset(cfg)
    model_a = checkpoint.load_any(checkpoint_a)
    model_b = checkpoint.load_any(checkpoint_b)
    features = concat(extract(model_a, ds.features), extract(model_b, ds.features))
    clf, reg, valid_err = select_classifier(
        features, ds.labels, ds.train_idx, ds.valid_idx, cfg.reg_grid
    )
    click.echo(f"concatenated width: {features.shape[1]}")
    click.echo(f"selected reg: {reg:g}")
    click.echo(f"validation error: {valid_err:.4f}")
    if ds.test_idx.size:
        test_err = error_rate(clf, features[ds.test_idx], ds.labels[ds.test_idx])
        click.echo(f"test error: {test_err:.4f}")


@main.command("finetune")
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path())
@click.option("--learning-rate", type=float, default=0.00125, show_default=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--batch-size", type=int, default=20, show_default=True)
@_config_options
@_handle_errors
def finetune_cmd(ckpt_path, learning_rate, epochs, batch_size, config_path, seed, out):
    """Supervised fine-tuning of an encoder checkpoint."""
    cfg = _load(config_path, seed, out)
    ds = build_dataset(cfg)
    model = checkpoint.load_any(ckpt_path)
    if not isinstance(model, DaeParams):
        raise ConfigError("finetune requires a tied-autoencoder checkpoint")
    result = finetune(model, ds, learning_rate, epochs, batch_size, seed=cfg.seed)
    out_dir = Path(cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "finetune.csv"
    with open(trace_path, "w") as f:
        f.write("epoch,train_loss,valid_error\n")
        for i in range(epochs):
            f.write(f"{i + 1},{result.train_loss[i]!r},{result.valid_error[i]!r}\n")
    click.echo(f"best epoch: {result.best_epoch}")
    if result.valid_error.size:
        click.echo(f"best validation error: {result.valid_error.min():.4f}")
    if ds.test_idx.size:
        x_test, y_test = ds.subset("test")
        test_err = float(np.mean(result.best_net.predict(x_test) != y_test))
        click.echo(f"test error: {test_err:.4f}")
    click.echo(f"written: {trace_path}")


@main.command()
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path())
@click.option("--rows", type=int, required=True)
@click.option("--cols", type=int, required=True)
@click.option("--channels", type=click.Choice(["gray", "rgb"]), default="gray", show_default=True)
@click.option("--count", type=int, default=None, help="filters to draw (default: all)")
@click.option("--out", "out_path", required=True, type=click.Path(), help="output .ppm file")
@_handle_errors
def viz(ckpt_path, rows, cols, channels, count, out_path):
    """Export filter tiles (weight rows) as a PPM image."""
    model = checkpoint.load_any(ckpt_path)
    if isinstance(model, DaeParams):
        weights = model.weights
    elif isinstance(model, CompositeParams):
        weights = np.vstack([p.weights for p in model.partitions])
    else:
        raise ConfigError("viz requires an autoencoder checkpoint")
    export_filters(weights, (rows, cols), channels, out_path, count)
    click.echo(f"written: {out_path}")


@main.command()
@_config_options
@click.option("--jobs", type=int, default=1, show_default=True, help="parallel grid workers")
@_handle_errors
def grid(config_path, seed, out, jobs):
    """Run the [grid] sweep and report the selected combination."""
    cfg = _load(config_path, seed, out)
    result = run_grid(cfg, jobs=jobs)
    nu, lr, ep = result["best"]
    click.echo(f"grid rows: {len(result['results'])}")
    click.echo(f"selected: noise_level={nu:g} learning_rate={lr:g} epochs={ep}")
    click.echo(f"report: {result['grid']}")


if __name__ == "__main__":
    main()
