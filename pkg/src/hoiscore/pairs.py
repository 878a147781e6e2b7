"""Detection filtering, human-object pair enumeration, and feature lookup.

Filtering is applied independently to the human subset and the non-human
subset: keep entries at or above the confidence threshold, backfill from
below-threshold entries (confidence order) up to min_keep, truncate to
max_keep. Ties break by original detection index, so the result is stable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import tensorio
from .core import Box, Detection
from .errors import DimensionMismatch, MissingEmbedding


@dataclass(frozen=True)
class PairProposal:
    image_id: str
    human: Detection
    object: Detection
    human_index: int
    object_index: int
    z_h: np.ndarray
    z_o: np.ndarray
    z_u: np.ndarray


class FeatureBundle:
    """Per-image detections plus their precomputed crop/union embeddings."""

    def __init__(self, image_id, detections, crop_embeddings, union_embeddings, dim):
        self.image_id = image_id
        self.detections = list(detections)
        self.crop_embeddings = dict(crop_embeddings)      # det index -> (d,)
        self.union_embeddings = dict(union_embeddings)    # (h, o) -> (d,)
        self.dim = dim

    def crop(self, index):
        emb = self.crop_embeddings.get(index)
        if emb is None:
            raise MissingEmbedding(self.image_id, ("crop", index))
        return emb

    def union(self, key):
        emb = self.union_embeddings.get(key)
        if emb is None:
            raise MissingEmbedding(self.image_id, ("union",) + tuple(key))
        return emb


def filter_detections(detections, person_label, threshold=0.2, min_keep=3, max_keep=15):
    """Split detections into kept humans and kept non-humans (index lists)."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must lie in [0, 1]")
    if not (1 <= min_keep <= max_keep):
        raise ValueError("need 1 <= min_keep <= max_keep")

    def keep_subset(indices):
        ranked = sorted(indices, key=lambda i: (-detections[i].confidence, i))
        above = [i for i in ranked if detections[i].confidence >= threshold]
        below = [i for i in ranked if detections[i].confidence < threshold]
        kept = above
        if len(kept) < min_keep:
            kept = kept + below[: min_keep - len(kept)]
        return kept[:max_keep]

    human_idx = [i for i, d in enumerate(detections) if d.label == person_label]
    other_idx = [i for i, d in enumerate(detections) if d.label != person_label]
    return keep_subset(human_idx), keep_subset(other_idx)


def enumerate_pairs(humans, all_kept):
    """All ordered (human, object) index pairs, self-pairs excluded.

    Order is deterministic: human index major, object index minor.
    """
    human_set = set(humans)
    if not human_set <= set(all_kept):
        raise ValueError("humans must be a subset of the kept detections")
    kept_sorted = sorted(all_kept)
    return [(h, o) for h in sorted(human_set) for o in kept_sorted if o != h]


def attach_features(pairs, bundle: FeatureBundle):
    """Build PairProposals by looking up the three crop embeddings per pair."""
    proposals = []
    for h, o in pairs:
        proposals.append(
            PairProposal(
                image_id=bundle.image_id,
                human=bundle.detections[h],
                object=bundle.detections[o],
                human_index=h,
                object_index=o,
                z_h=bundle.crop(h),
                z_o=bundle.crop(o),
                z_u=bundle.union((h, o)),
            )
        )
    return proposals


def proposals_from_bundle(bundle, person_label, config):
    """Filter, enumerate, and attach in one step."""
    humans, others = filter_detections(
        bundle.detections,
        person_label,
        threshold=config.detection_threshold,
        min_keep=config.min_keep,
        max_keep=config.max_keep,
    )
    pairs = enumerate_pairs(humans, humans + others)
    return attach_features(pairs, bundle)


def save_bundle(bundle: FeatureBundle, json_path) -> None:
    base = os.path.splitext(json_path)[0]
    tensor_path = base + ".dytf"
    rows = []
    crop_rows = {}
    for idx in sorted(bundle.crop_embeddings):
        crop_rows[str(idx)] = len(rows)
        rows.append(bundle.crop_embeddings[idx])
    union_rows = []
    for key in sorted(bundle.union_embeddings):
        union_rows.append({"human": key[0], "object": key[1], "row": len(rows)})
        rows.append(bundle.union_embeddings[key])
    stack = (
        np.stack(rows, axis=0).astype(np.float32)
        if rows
        else np.zeros((0, bundle.dim), dtype=np.float32)
    )
    tensorio.write_tensor(stack, tensor_path)
    doc = {
        "format": "feature-bundle",
        "image_id": bundle.image_id,
        "dim": int(bundle.dim),
        "tensor": os.path.basename(tensor_path),
        "detections": [
            {"box": d.box.as_list(), "label": d.label, "confidence": d.confidence}
            for d in bundle.detections
        ],
        "crop_rows": crop_rows,
        "union_rows": union_rows,
    }
    tmp = f"{json_path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, json_path)


def load_bundle(json_path) -> FeatureBundle:
    with open(json_path) as fh:
        doc = json.load(fh)
    dim = int(doc["dim"])
    tensor_path = os.path.join(os.path.dirname(json_path) or ".", doc["tensor"])
    stack = tensorio.read_tensor(tensor_path)
    if stack.ndim != 2 or (stack.shape[0] > 0 and stack.shape[1] != dim):
        raise DimensionMismatch(f"bundle tensor shape {stack.shape}, expected (*, {dim})")
    detections = [
        Detection(box=Box(*d["box"]), label=d["label"], confidence=d["confidence"])
        for d in doc["detections"]
    ]
    crops = {int(idx): stack[row] for idx, row in doc["crop_rows"].items()}
    unions = {(u["human"], u["object"]): stack[u["row"]] for u in doc["union_rows"]}
    return FeatureBundle(doc["image_id"], detections, crops, unions, dim)


def load_bundle_dir(directory):
    """Load every bundle JSON in a directory, sorted by filename."""
    names = sorted(n for n in os.listdir(directory) if n.endswith(".json"))
    return [load_bundle(os.path.join(directory, n)) for n in names]
