"""Denoising autoencoders trained under scheduled, sampled, and
composite corruption levels, with linear-classifier evaluation and
feature-diversity analysis."""

from .analysis import (
    ActivationSet,
    activation_vectors,
    cosine,
    export_filters,
    filter_grid_image,
    match_counts,
)
from .backend import backend_name
from .checkpoint import (
    load_any,
    load_classifier,
    load_composite,
    load_dae,
    save_classifier,
    save_composite,
    save_dae,
)
from .composite import (
    CompositeParams,
    Partition,
    composite_decode,
    composite_encode,
    composite_grad,
    init_composite,
    train_composite,
)
from .corruption import CorruptionKind, corrupt, gaussian_corrupt, mask_corrupt
from .dae import (
    DaeParams,
    TrainConfig,
    cross_entropy,
    decode,
    encode,
    grad,
    init_params,
    sgd_epoch,
    squared_error,
    train_da,
)
from .datasets import (
    LabeledDataset,
    load_bow,
    load_cifar10,
    merge_with_test,
    split,
    surrogate_images,
    synthetic_bow,
    synthetic_dataset,
)
from .errors import ConfigError, FormatError, NumericalError, ShapeError
from .evaluate import (
    FinetuneResult,
    LinearClassifier,
    concat,
    error_rate,
    extract,
    finetune,
    select_classifier,
    select_model,
    train_logreg,
)
from .numerics import Rng, matmul, relu, sigmoid
from .schedule import (
    NoiseSchedule,
    SampledNoiseSpec,
    build_schedule,
    train_sampled,
    train_scheda,
)

__version__ = "0.1.0"
