"""Feature-diversity analytics and filter visualization.

A feature's activation vector is its response over a whole dataset.
Features from different models are compared by cosine similarity of
those vectors; match counting asks, for each feature of a target model,
which reference model hosts its nearest neighbour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .evaluate import extract
from .numerics import as_matrix


@dataclass
class ActivationSet:
    """Per-feature activation rows: shape (features, examples)."""

    activations: np.ndarray
    tag: str = ""


def activation_vectors(model, data: np.ndarray, tag: str = "") -> ActivationSet:
    """Row i holds feature i's activation across the dataset."""
    return ActivationSet(extract(model, data).T.copy(), tag)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"vector lengths differ: {a.size} vs {b.size}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(a @ b) / (na * nb)


def _unit_rows(acts: np.ndarray, tag: str) -> np.ndarray:
    norms = np.linalg.norm(acts, axis=1)
    if np.any(norms == 0.0):
        raise ValueError(f"activation set {tag!r} contains a zero feature")
    return acts / norms[:, None]


def match_counts(target: ActivationSet, references: list[ActivationSet]) -> np.ndarray:
    """How many target features are nearest to each reference set.

    For target feature i and reference r, the score is the maximum
    cosine similarity over r's features; feature i is credited to the
    best-scoring reference, earliest reference on ties. Counts always
    sum to the number of target features.
    """
    if not references:
        raise ValueError("at least one reference set is required")
    tgt = as_matrix(target.activations, "target activations")
    n = tgt.shape[1]
    for ref in references:
        if ref.activations.shape[1] != n:
            raise ShapeError(
                f"reference {ref.tag!r} covers {ref.activations.shape[1]} examples, "
                f"target covers {n}"
            )
    tgt_unit = _unit_rows(tgt, target.tag)
    best = np.empty((tgt.shape[0], len(references)))
    for r, ref in enumerate(references):
        ref_unit = _unit_rows(as_matrix(ref.activations, "reference"), ref.tag)
        best[:, r] = (tgt_unit @ ref_unit.T).max(axis=1)
    winners = np.argmax(best, axis=1)  # first maximum = earliest reference
    return np.bincount(winners, minlength=len(references)).astype(np.int64)


def write_match_counts_csv(tags: list[str], counts, path) -> None:
    lines = ["reference_tag,count"]
    lines += [f"{tag},{int(c)}" for tag, c in zip(tags, counts)]
    Path(path).write_text("\n".join(lines) + "\n")


def _tile_shape(width: int, channels: str) -> tuple[int, int]:
    if channels not in ("gray", "rgb"):
        raise ValueError(f"unknown channel layout {channels!r}")
    per = width
    if channels == "rgb":
        if width % 3:
            raise ValueError(f"filter length {width} is not divisible by 3")
        per = width // 3
    side = math.isqrt(per)
    if side * side != per:
        raise ValueError(f"filter length {per} per channel is not a perfect square")
    return side, side


def filter_grid_image(
    weights: np.ndarray, grid: tuple[int, int], channels: str, count: int | None = None
) -> np.ndarray:
    """Tile filters (rows of the weight matrix) into an RGB byte image.

    Each filter is min-max normalized on its own (constant filters map
    to mid-gray 127); tiles are separated by 1-pixel black lines.
    """
    weights = as_matrix(weights, "weights")
    rows, cols = grid
    n = weights.shape[0] if count is None else count
    if n > weights.shape[0]:
        raise ValueError(f"asked for {n} filters, matrix has {weights.shape[0]}")
    if rows * cols < n:
        raise ValueError(f"grid {rows}x{cols} cannot hold {n} filters")
    th, tw = _tile_shape(weights.shape[1], channels)
    canvas = np.zeros((rows * th + rows - 1, cols * tw + cols - 1, 3), dtype=np.uint8)
    for i in range(n):
        f = weights[i]
        lo, hi = float(f.min()), float(f.max())
        if hi > lo:
            scaled = np.rint((f - lo) / (hi - lo) * 255.0).astype(np.uint8)
        else:
            scaled = np.full(f.shape, 127, dtype=np.uint8)
        if channels == "rgb":
            tile = scaled.reshape(3, th, tw).transpose(1, 2, 0)
        else:
            tile = np.repeat(scaled.reshape(th, tw)[:, :, None], 3, axis=2)
        r, c = divmod(i, cols)
        canvas[r * (th + 1) : r * (th + 1) + th, c * (tw + 1) : c * (tw + 1) + tw] = tile
    return canvas


def export_filters(
    weights: np.ndarray,
    grid: tuple[int, int],
    channels: str,
    path,
    count: int | None = None,
) -> None:
    """Write the filter grid as a binary PPM (P6) file."""
    img = filter_grid_image(weights, grid, channels, count)
    header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())
