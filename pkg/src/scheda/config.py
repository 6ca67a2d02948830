"""Experiment configuration files.

Flat key=value text with section headers (INI syntax). Sections:
``[experiment]`` (model kind, seed, output), ``[dataset]``, ``[train]``,
one optional model-kind section (``[schedule]``, ``[sampled]``, or
``[composite]``, matching the model), optional ``[eval]`` and
``[grid]``. Unknown sections or keys are rejected so typos surface at
launch. A fully resolved copy of the config is what a run writes as its
manifest; parsing the manifest reproduces the run.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path

from .corruption import CorruptionKind
from .dae import TrainConfig
from .errors import ConfigError
from .evaluate import REG_GRID
from .schedule import NoiseSchedule, SampledNoiseSpec

MODEL_KINDS = ("da", "scheda", "composite", "sampled")
DATASET_KINDS = ("synthetic", "surrogate", "cifar10", "bow")

_MODEL_SECTIONS = {"scheda": "schedule", "composite": "composite", "sampled": "sampled"}

_SECTION_KEYS = {
    "experiment": {"model", "seed", "output", "metrics_every", "dense_early"},
    "dataset": {
        "kind", "seed", "n", "dim", "classes", "binary", "side",
        "train_n", "valid_n", "test_n", "train_batches", "test_batch",
        "path", "vocab",
    },
    "train": {
        "learning_rate", "epochs", "batch_size", "loss", "noise_kind",
        "noise_level", "hidden_units", "enc_transfer", "dec_transfer",
    },
    "schedule": {"delta", "switches", "epochs_per_level", "direction", "donor"},
    "sampled": {"mode", "lo", "hi", "levels"},
    "composite": {"hidden_sizes", "levels", "update_mode", "phase_epochs"},
    "eval": {"reg_grid"},
    "grid": {"noise_levels", "learning_rates", "epochs"},
}


@dataclass
class DatasetSpec:
    kind: str
    seed: int
    train_n: int
    valid_n: int
    test_n: int | None = None  # None: everything left over / whole test file
    n: int = 0
    dim: int = 0
    classes: int = 0
    binary: bool = False
    side: int = 32
    train_batches: tuple[str, ...] = ()
    test_batch: str = ""
    path: str = ""
    vocab: int = 0


@dataclass
class CompositeSpec:
    hidden_sizes: tuple[int, ...]
    levels: tuple[float, ...]
    update_mode: str = "alternating"
    phase_epochs: int = 50


@dataclass
class GridSpec:
    noise_levels: tuple[float, ...]
    learning_rates: tuple[float, ...]
    epochs: tuple[int, ...]

    def combos(self):
        """Canonical enumeration: noise desc, learning rate asc, epochs asc."""
        for nu in sorted(self.noise_levels, reverse=True):
            for lr in sorted(self.learning_rates):
                for ep in sorted(self.epochs):
                    yield nu, lr, ep


@dataclass
class ExperimentConfig:
    model: str
    seed: int
    output: str
    metrics_every: int
    dense_early: bool
    dataset: DatasetSpec
    train: TrainConfig
    reg_grid: tuple[float, ...] = REG_GRID
    schedule: NoiseSchedule | None = None
    donor: str = ""
    sampled: SampledNoiseSpec | None = None
    composite: CompositeSpec | None = None
    grid: GridSpec | None = None


class _Section:
    """One config section with typed, error-annotated accessors."""

    def __init__(self, name: str, items: dict):
        self.name = name
        self.items = dict(items)

    def _fail(self, key, message):
        raise ConfigError(f"[{self.name}] {key}: {message}")

    def get(self, key, default=None, required=False):
        if key not in self.items:
            if required:
                self._fail(key, "missing required key")
            return default
        return self.items[key]

    def typed(self, key, convert, default=None, required=False):
        raw = self.get(key, required=required)
        if raw is None:
            return default
        try:
            return convert(raw)
        except (ValueError, TypeError):
            self._fail(key, f"cannot parse {raw!r}")

    def int(self, key, default=None, required=False):
        return self.typed(key, int, default, required)

    def float(self, key, default=None, required=False):
        return self.typed(key, float, default, required)

    def bool(self, key, default=False):
        raw = self.get(key)
        if raw is None:
            return default
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        self._fail(key, f"expected a boolean, got {raw!r}")

    def str(self, key, default=None, required=False, choices=None):
        val = self.get(key, default, required)
        if choices is not None and val is not None and val not in choices:
            self._fail(key, f"must be one of {choices}, got {val!r}")
        return val

    def floats(self, key, default=(), required=False):
        raw = self.get(key, required=required)
        if raw is None:
            return tuple(default)
        return self.typed(key, lambda s: tuple(float(t) for t in s.split()), required=required)

    def ints(self, key, default=(), required=False):
        raw = self.get(key, required=required)
        if raw is None:
            return tuple(default)
        return self.typed(key, lambda s: tuple(int(t) for t in s.split()), required=required)

    def strs(self, key, default=()):
        raw = self.get(key)
        if raw is None:
            return tuple(default)
        return tuple(raw.split())


def _read_ini(text: str) -> dict[str, _Section]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None
    sections = {}
    for name in parser.sections():
        if name not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{name}]")
        for key in parser[name]:
            if key not in _SECTION_KEYS[name]:
                raise ConfigError(f"[{name}] {key}: unknown key")
        sections[name] = _Section(name, parser[name])
    return sections


def _dataset_spec(sec: _Section, default_seed: int) -> DatasetSpec:
    kind = sec.str("kind", required=True, choices=DATASET_KINDS)
    spec = DatasetSpec(
        kind=kind,
        seed=sec.int("seed", 0),
        train_n=sec.int("train_n", required=True),
        valid_n=sec.int("valid_n", required=True),
        test_n=sec.int("test_n", None),
        n=sec.int("n", 0),
        dim=sec.int("dim", 0),
        classes=sec.int("classes", 4),
        binary=sec.bool("binary", False),
        side=sec.int("side", 32),
        train_batches=sec.strs("train_batches"),
        test_batch=sec.str("test_batch", ""),
        path=sec.str("path", ""),
        vocab=sec.int("vocab", 0),
    )
    if kind in ("synthetic", "surrogate") and spec.n <= 0:
        raise ConfigError(f"[dataset] n: required for kind={kind}")
    if kind == "synthetic" and spec.dim <= 0:
        raise ConfigError("[dataset] dim: required for kind=synthetic")
    if kind == "cifar10" and not spec.train_batches:
        raise ConfigError("[dataset] train_batches: required for kind=cifar10")
    if kind == "bow" and (not spec.path or spec.vocab <= 0):
        raise ConfigError("[dataset] path and vocab: required for kind=bow")
    for p in list(spec.train_batches) + ([spec.test_batch] if spec.test_batch else []):
        if not Path(p).exists():
            raise ConfigError(f"[dataset] file does not exist: {p}")
    if spec.kind == "bow" and not Path(spec.path).exists():
        raise ConfigError(f"[dataset] file does not exist: {spec.path}")
    return spec


def _train_config(sec: _Section, seed: int) -> TrainConfig:
    try:
        return TrainConfig(
            learning_rate=sec.float("learning_rate", required=True),
            epochs=sec.int("epochs", required=True),
            batch_size=sec.int("batch_size", 20),
            loss=sec.str("loss", "cross_entropy"),
            corruption=CorruptionKind(
                sec.str("noise_kind", "masking"),
                sec.float("noise_level", required=True),
            ),
            seed=seed,
            hidden_units=sec.int("hidden_units", required=True),
            enc_transfer=sec.str("enc_transfer", "sigmoid"),
            dec_transfer=sec.str("dec_transfer", "sigmoid"),
        )
    except ValueError as exc:
        raise ConfigError(f"[train] {exc}") from None


def parse_config(
    text: str,
    seed_override: int | None = None,
    output_override: str | None = None,
    metrics_every_override: int | None = None,
) -> ExperimentConfig:
    sections = _read_ini(text)
    for required in ("experiment", "dataset", "train"):
        if required not in sections:
            raise ConfigError(f"missing required section [{required}]")

    exp = sections["experiment"]
    model = exp.str("model", required=True, choices=MODEL_KINDS)
    seed = seed_override if seed_override is not None else exp.int("seed", required=True)
    output = output_override if output_override is not None else exp.str("output", required=True)
    metrics_every = (
        metrics_every_override
        if metrics_every_override is not None
        else exp.int("metrics_every", 0)
    )

    for kind, section_name in _MODEL_SECTIONS.items():
        if section_name in sections and model != kind:
            raise ConfigError(
                f"section [{section_name}] is only valid for model={kind} (model is {model})"
            )

    dataset = _dataset_spec(sections["dataset"], seed)
    train = _train_config(sections["train"], seed)

    cfg = ExperimentConfig(
        model=model,
        seed=seed,
        output=output,
        metrics_every=metrics_every,
        dense_early=exp.bool("dense_early", False),
        dataset=dataset,
        train=train,
    )

    if "eval" in sections:
        grid = sections["eval"].floats("reg_grid", REG_GRID)
        if any(reg <= 0 for reg in grid):
            raise ConfigError("[eval] reg_grid: values must be > 0")
        cfg.reg_grid = grid

    if model == "scheda":
        if "schedule" not in sections:
            raise ConfigError("model=scheda requires a [schedule] section")
        sec = sections["schedule"]
        try:
            cfg.schedule = NoiseSchedule(
                start=train.corruption.level,
                step=sec.float("delta", required=True),
                switches=sec.int("switches", required=True),
                epochs_per_level=sec.int("epochs_per_level", required=True),
                initial_epochs=train.epochs,
                direction=sec.str("direction", "decreasing"),
            )
        except ValueError as exc:
            raise ConfigError(f"[schedule] {exc}") from None
        cfg.donor = sec.str("donor", "")
        if cfg.donor and not Path(cfg.donor).exists():
            raise ConfigError(f"[schedule] donor does not exist: {cfg.donor}")
    elif model == "sampled":
        if "sampled" not in sections:
            raise ConfigError("model=sampled requires a [sampled] section")
        sec = sections["sampled"]
        mode = sec.str("mode", required=True, choices=("continuous", "discrete"))
        try:
            if mode == "continuous":
                cfg.sampled = SampledNoiseSpec(
                    "continuous",
                    lo=sec.float("lo", required=True),
                    hi=sec.float("hi", required=True),
                )
            else:
                cfg.sampled = SampledNoiseSpec("discrete", levels=sec.floats("levels", required=True))
        except ValueError as exc:
            raise ConfigError(f"[sampled] {exc}") from None
    elif model == "composite":
        if "composite" not in sections:
            raise ConfigError("model=composite requires a [composite] section")
        sec = sections["composite"]
        sizes = sec.ints("hidden_sizes", required=True)
        levels = sec.floats("levels", required=True)
        if len(sizes) != len(levels):
            raise ConfigError("[composite] hidden_sizes and levels must have equal length")
        cfg.composite = CompositeSpec(
            hidden_sizes=sizes,
            levels=levels,
            update_mode=sec.str("update_mode", "alternating", choices=("joint", "alternating")),
            phase_epochs=sec.int("phase_epochs", 50),
        )

    if "grid" in sections:
        if model != "da":
            raise ConfigError("section [grid] is only valid for model=da")
        sec = sections["grid"]
        cfg.grid = GridSpec(
            noise_levels=sec.floats("noise_levels", required=True),
            learning_rates=sec.floats("learning_rates", required=True),
            epochs=sec.ints("epochs", required=True),
        )
    return cfg


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, **overrides)


def resolved_manifest(cfg: ExperimentConfig) -> str:
    """Serialize the fully resolved config; parsing it replays the run."""
    parser = configparser.ConfigParser(interpolation=None)
    parser["experiment"] = {
        "model": cfg.model,
        "seed": str(cfg.seed),
        "output": cfg.output,
        "metrics_every": str(cfg.metrics_every),
        "dense_early": str(cfg.dense_early).lower(),
    }
    ds = cfg.dataset
    dataset_items = {"kind": ds.kind, "seed": str(ds.seed),
                     "train_n": str(ds.train_n), "valid_n": str(ds.valid_n)}
    if ds.test_n is not None:
        dataset_items["test_n"] = str(ds.test_n)
    if ds.kind in ("synthetic", "surrogate"):
        dataset_items.update(n=str(ds.n), classes=str(ds.classes))
    if ds.kind == "synthetic":
        dataset_items.update(dim=str(ds.dim), binary=str(ds.binary).lower())
    if ds.kind == "surrogate":
        dataset_items.update(side=str(ds.side))
    if ds.kind == "cifar10":
        dataset_items["train_batches"] = " ".join(ds.train_batches)
        if ds.test_batch:
            dataset_items["test_batch"] = ds.test_batch
    if ds.kind == "bow":
        dataset_items.update(path=ds.path, vocab=str(ds.vocab))
    parser["dataset"] = dataset_items

    t = cfg.train
    parser["train"] = {
        "learning_rate": repr(t.learning_rate),
        "epochs": str(t.epochs),
        "batch_size": str(t.batch_size),
        "loss": t.loss,
        "noise_kind": t.corruption.kind,
        "noise_level": repr(t.corruption.level),
        "hidden_units": str(t.hidden_units),
        "enc_transfer": t.enc_transfer,
        "dec_transfer": t.dec_transfer,
    }
    parser["eval"] = {"reg_grid": " ".join(repr(r) for r in cfg.reg_grid)}

    if cfg.schedule is not None:
        parser["schedule"] = {
            "delta": repr(cfg.schedule.step),
            "switches": str(cfg.schedule.switches),
            "epochs_per_level": str(cfg.schedule.epochs_per_level),
            "direction": cfg.schedule.direction,
        }
        if cfg.donor:
            parser["schedule"]["donor"] = cfg.donor
    if cfg.sampled is not None:
        if cfg.sampled.mode == "continuous":
            parser["sampled"] = {"mode": "continuous", "lo": repr(cfg.sampled.lo), "hi": repr(cfg.sampled.hi)}
        else:
            parser["sampled"] = {"mode": "discrete", "levels": " ".join(repr(l) for l in cfg.sampled.levels)}
    if cfg.composite is not None:
        parser["composite"] = {
            "hidden_sizes": " ".join(str(h) for h in cfg.composite.hidden_sizes),
            "levels": " ".join(repr(l) for l in cfg.composite.levels),
            "update_mode": cfg.composite.update_mode,
            "phase_epochs": str(cfg.composite.phase_epochs),
        }
    if cfg.grid is not None:
        parser["grid"] = {
            "noise_levels": " ".join(repr(l) for l in cfg.grid.noise_levels),
            "learning_rates": " ".join(repr(l) for l in cfg.grid.learning_rates),
            "epochs": " ".join(str(e) for e in cfg.grid.epochs),
        }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
