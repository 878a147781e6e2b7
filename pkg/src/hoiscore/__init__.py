"""Training-free human-object interaction scoring engine."""

from .config import RunConfig
from .core import Box, Detection, InteractionCategory, cosine, iou, normalize, union_box

__all__ = [
    "Box",
    "Detection",
    "InteractionCategory",
    "RunConfig",
    "cosine",
    "iou",
    "normalize",
    "union_box",
]

__version__ = "0.1.0"
