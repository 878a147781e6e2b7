"""Shared domain types and elementary vector/geometry operations.

Embeddings are plain float32 numpy arrays, unit-normalized exactly once at
ingestion. All reductions accumulate in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroNorm

ZERO_NORM_EPS = 1e-12


def normalize(v) -> np.ndarray:
    """Return v scaled to unit L2 norm, as float32.

    Raises ZeroNorm if ``norm(v) < 1e-12``.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatch(f"expected a nonempty 1-d vector, got shape {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if norm < ZERO_NORM_EPS:
        raise ZeroNorm(f"cannot normalize vector with norm {norm}")
    return (arr / norm).astype(np.float32)


def normalize_rows(mat) -> np.ndarray:
    """Row-wise normalize a 2-d array; any zero row raises ZeroNorm."""
    arr = np.asarray(mat, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {arr.shape}")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms < ZERO_NORM_EPS):
        bad = int(np.argmin(norms))
        raise ZeroNorm(f"row {bad} has norm {norms[bad]}")
    return (arr / norms[:, None]).astype(np.float32)


def cosine(a, b) -> float:
    """Dot product of two unit vectors (cosine similarity)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in corner form, absolute pixels."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate box {self}")
        if min(self.x1, self.y1) < 0:
            raise ValueError(f"negative coordinates in {self}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_list(self) -> list:
        return [self.x1, self.y1, self.x2, self.y2]


def union_box(a: Box, b: Box) -> Box:
    """Smallest axis-aligned box containing both inputs."""
    return Box(min(a.x1, b.x1), min(a.y1, b.y1), max(a.x2, b.x2), max(a.y2, b.y2))


def iou(a: Box, b: Box) -> float:
    """Intersection over union, in [0, 1]."""
    ix1, iy1 = max(a.x1, b.x1), max(a.y1, b.y1)
    ix2, iy2 = min(a.x2, b.x2), min(a.y2, b.y2)
    iw, ih = max(0.0, ix2 - ix1), max(0.0, iy2 - iy1)
    inter = iw * ih
    if inter <= 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class Detection:
    """A localized instance: box, class label, detector confidence."""

    box: Box
    label: str
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class InteractionCategory:
    """One (verb, object) class of the interaction vocabulary."""

    id: int
    verb: str
    object: str
    rare: bool = False
