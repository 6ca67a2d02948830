"""Training under a sequence of noise levels.

A schedule starts from parameters already trained at the first level
and continues training for a fixed number of epochs at each subsequent
level, decreasing (the usual direction) or increasing (a control). A
sampled variant instead redraws the level for every minibatch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dae import (
    STREAM_INIT,
    STREAM_NU,
    STREAM_SCHEDULE,
    STREAM_TRAIN,
    DaeParams,
    TrainConfig,
    init_params,
    sgd_epoch,
    with_level,
)
from .numerics import Rng

DIRECTIONS = ("decreasing", "increasing")


def build_schedule(
    start: float, step: float, switches: int, direction: str = "decreasing"
) -> list[float]:
    """Levels [nu_0, nu_1, ..., nu_T] with nu_t = nu_0 -/+ t*step.

    Levels are rounded to 10 decimals so repeated subtraction cannot
    drift (0.7 - 6*0.1 is exactly 0.1 here). Raises before any training
    if the sequence leaves [0, 1].
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}")
    if step <= 0:
        raise ValueError("step must be > 0")
    if switches < 0:
        raise ValueError("switches must be >= 0")
    sign = -1.0 if direction == "decreasing" else 1.0
    levels = [round(start + sign * t * step, 10) for t in range(switches + 1)]
    if any(not 0.0 <= nu <= 1.0 for nu in levels):
        raise ValueError(f"schedule leaves [0, 1]: {levels}")
    return levels


@dataclass(frozen=True)
class NoiseSchedule:
    """A level sequence plus per-level epoch budget.

    ``initial_epochs`` is the budget at the starting level (taken from
    the donor model's training when continuing, explicit when training
    from scratch); ``epochs_per_level`` applies to every level after a
    switch.
    """

    start: float
    step: float
    switches: int
    epochs_per_level: int
    initial_epochs: int = 0
    direction: str = "decreasing"

    def __post_init__(self):
        if self.epochs_per_level < 1:
            raise ValueError("epochs_per_level must be >= 1")
        if self.initial_epochs < 0:
            raise ValueError("initial_epochs must be >= 0")
        self.levels()  # validates step, switches, direction, bounds

    def levels(self) -> list[float]:
        return build_schedule(self.start, self.step, self.switches, self.direction)


def train_scheda(
    data: np.ndarray,
    base: DaeParams,
    sched: NoiseSchedule,
    cfg: TrainConfig,
    rng: Rng | None = None,
) -> tuple[DaeParams, list[tuple[float, DaeParams]], list[tuple[float, float]]]:
    """Continue training ``base`` through the post-switch levels.

    ``base`` is expected to have been trained at ``sched.start``. For
    each of the T switched levels the model trains epochs_per_level
    epochs and a parameter snapshot is taken after the last one.
    Returns (final params, [(level, snapshot), ...], [(level, loss), ...]).
    """
    params = base.copy()
    if rng is None:
        rng = Rng(cfg.seed).derive(STREAM_SCHEDULE)
    checkpoints: list[tuple[float, DaeParams]] = []
    trace: list[tuple[float, float]] = []
    for level in sched.levels()[1:]:
        level_cfg = with_level(cfg, level)
        for _ in range(sched.epochs_per_level):
            loss = sgd_epoch(params, data, level_cfg, rng)
            trace.append((level, loss))
        checkpoints.append((level, params.copy()))
    return params, checkpoints, trace


def level_at_epoch(sched: NoiseSchedule, epoch: int) -> float:
    """Noise level active at global epoch ``epoch`` (0-based).

    Epochs [0, initial_epochs) run at the starting level; each
    subsequent block of epochs_per_level runs one switch further.
    """
    levels = sched.levels()
    if epoch < sched.initial_epochs:
        return levels[0]
    t = 1 + (epoch - sched.initial_epochs) // sched.epochs_per_level
    if t > sched.switches:
        raise ValueError(f"epoch {epoch} is beyond the schedule")
    return levels[t]


@dataclass(frozen=True)
class SampledNoiseSpec:
    """Per-minibatch noise level distribution.

    ``continuous`` draws uniformly from [lo, hi); ``discrete`` draws
    uniformly from a fixed set of levels.
    """

    mode: str
    lo: float = 0.0
    hi: float = 0.0
    levels: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.mode == "continuous":
            if not 0.0 <= self.lo <= self.hi <= 1.0:
                raise ValueError(
                    f"continuous interval must satisfy 0 <= lo <= hi <= 1, "
                    f"got [{self.lo}, {self.hi}]"
                )
        elif self.mode == "discrete":
            if not self.levels:
                raise ValueError("discrete level set is empty")
            if any(not 0.0 <= nu <= 1.0 for nu in self.levels):
                raise ValueError(f"levels outside [0, 1]: {self.levels}")
        else:
            raise ValueError(f"unknown sampling mode {self.mode!r}")

    def draw(self, rng: Rng) -> float:
        if self.mode == "continuous":
            return float(rng.uniform(self.lo, self.hi, 1)[0])
        return self.levels[rng.integer(len(self.levels))]


def train_sampled(
    data: np.ndarray,
    spec: SampledNoiseSpec,
    cfg: TrainConfig,
    rng: Rng | None = None,
) -> tuple[DaeParams, np.ndarray]:
    """Like train_da, but the noise level is redrawn for each minibatch.

    Levels come from their own stream (STREAM_NU), so a degenerate spec
    (lo == hi) consumes corruption draws exactly like fixed-level
    training and reproduces it bit for bit.
    """
    master = Rng(cfg.seed)
    params = init_params(
        data.shape[1],
        cfg.hidden_units,
        master.derive(STREAM_INIT),
        cfg.enc_transfer,
        cfg.dec_transfer,
    )
    if rng is None:
        rng = master.derive(STREAM_TRAIN)
    nu_rng = master.derive(STREAM_NU)
    trace = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        trace[epoch] = sgd_epoch(
            params, data, cfg, rng, _level_fn=lambda _i: spec.draw(nu_rng)
        )
    return params, trace
