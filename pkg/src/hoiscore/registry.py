"""Visual exemplar registry: build from labeled annotations or from
textual-head pseudolabels, filter for zero-shot hold-outs, persist.

Labeled builds keep the first J entries per category in dataset order;
pseudo builds keep the J highest-scoring admissions. Both are deterministic.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from . import tensorio
from .core import normalize
from .errors import DimensionMismatch, MissingEmbedding, UnknownCategory
from .pairs import proposals_from_bundle
from .scoring import score_pair

BOX_MATCH_TOL = 1e-3


@dataclass(frozen=True)
class RegistryEntry:
    category: int
    z_h: np.ndarray
    z_o: np.ndarray
    z_u: np.ndarray
    source: str                 # "labeled" | "pseudo"
    score: float = None         # pseudo only
    origin: tuple = None        # (image id, human index, object index)


class Registry:
    """Per-category exemplar lists, each at most J entries."""

    def __init__(self, entries_by_category, capacity, dim):
        self.capacity = capacity
        self.dim = dim
        self.entries_by_category = {
            c: tuple(v) for c, v in sorted(entries_by_category.items()) if v
        }
        for c, v in self.entries_by_category.items():
            if len(v) > capacity:
                raise ValueError(f"category {c} exceeds capacity {capacity}")
        self._instance = None
        self._contextual = None

    def entries(self, category):
        return self.entries_by_category.get(category, ())

    def categories(self):
        return sorted(self.entries_by_category)

    def __len__(self):
        return sum(len(v) for v in self.entries_by_category.values())

    def instance_keys(self):
        """(R, 2d) renormalized human||object keys with category ids."""
        if self._instance is None:
            keys, cats = [], []
            for c in self.categories():
                for e in self.entries_by_category[c]:
                    keys.append(normalize(np.concatenate([e.z_h, e.z_o])))
                    cats.append(c)
            mat = (
                np.stack(keys, axis=0)
                if keys
                else np.zeros((0, 2 * self.dim), dtype=np.float32)
            )
            self._instance = (mat, np.asarray(cats, dtype=np.int64))
        return self._instance

    def contextual_keys(self):
        """One key per category: the float64 mean of its union embeddings."""
        if self._contextual is None:
            keys, cats = [], []
            for c in self.categories():
                unions = np.stack(
                    [e.z_u for e in self.entries_by_category[c]], axis=0
                ).astype(np.float64)
                keys.append(unions.mean(axis=0))
                cats.append(c)
            mat = np.stack(keys, axis=0) if keys else np.zeros((0, self.dim))
            self._contextual = (mat, np.asarray(cats, dtype=np.int64))
        return self._contextual


def _boxes_match(a, b):
    return all(abs(x - y) <= BOX_MATCH_TOL for x, y in zip(a.as_list(), b))


def _resolve_annotation(bundle, ann):
    human = object_ = None
    for idx, det in enumerate(bundle.detections):
        if human is None and _boxes_match(det.box, ann["human_box"]):
            human = idx
        elif object_ is None and _boxes_match(det.box, ann["object_box"]):
            object_ = idx
    if human is None or object_ is None:
        raise MissingEmbedding(bundle.image_id, ("annotation", tuple(ann["human_box"])))
    return human, object_


def build_labeled(bundles, annotations, capacity, dim):
    """First-J entries per category, in annotation (dataset) order."""
    by_image = {b.image_id: b for b in bundles}
    pools = {}
    for ann in annotations:
        bundle = by_image.get(ann["image_id"])
        if bundle is None:
            raise MissingEmbedding(ann["image_id"], ("bundle",))
        h, o = _resolve_annotation(bundle, ann)
        cat = int(ann["category"])
        pool = pools.setdefault(cat, [])
        if len(pool) >= capacity:
            continue
        pool.append(
            RegistryEntry(
                category=cat,
                z_h=bundle.crop(h),
                z_o=bundle.crop(o),
                z_u=bundle.union((h, o)),
                source="labeled",
                origin=(bundle.image_id, h, o),
            )
        )
    return Registry(pools, capacity, dim)


def pseudo_candidates(bundles, signatures, person_label, config, score_source=None):
    """Score every pair with the textual heads; yield per-pair argmax labels.

    Returns a deterministic list of (category, score, entry) admissions
    BEFORE threshold filtering and truncation. An alternative score source
    (e.g. an external likelihood file) may override the textual scorer; it
    must map (image id, human index, object index) to (category, score).
    """
    textual = replace(config, heads=("tf", "tc"), gamma=0.0)
    out = []
    for bundle in sorted(bundles, key=lambda b: b.image_id):
        for prop in proposals_from_bundle(bundle, person_label, textual):
            key = (prop.image_id, prop.human_index, prop.object_index)
            if score_source is not None:
                got = score_source(*key)
                if got is None:
                    continue
                cat, score = got
            else:
                cat, score = score_pair(prop, signatures, None, textual)[0]
            entry = RegistryEntry(
                category=int(cat),
                z_h=prop.z_h,
                z_o=prop.z_o,
                z_u=prop.z_u,
                source="pseudo",
                score=float(score),
                origin=key,
            )
            out.append(entry)
    return out


def build_pseudo(
    bundles, signatures, person_label, config, threshold=0.9, capacity=8, score_source=None
):
    """Admit argmax pseudolabels with score >= threshold; keep top J per class."""
    candidates = pseudo_candidates(bundles, signatures, person_label, config, score_source)
    pools = {}
    for entry in candidates:
        if entry.score >= threshold:
            pools.setdefault(entry.category, []).append(entry)
    kept = {}
    for cat, pool in pools.items():
        pool.sort(key=lambda e: (-e.score, e.origin))
        kept[cat] = pool[:capacity]
    dim = signatures.dim
    return Registry(kept, capacity, dim)


def filter_zero_shot(registry: Registry, held_out, num_categories) -> Registry:
    """Empty the exemplar lists of every held-out category."""
    held = set(int(c) for c in held_out)
    bad = [c for c in held if not (0 <= c < num_categories)]
    if bad:
        raise UnknownCategory(f"held-out ids outside vocabulary: {sorted(bad)}")
    remaining = {
        c: v for c, v in registry.entries_by_category.items() if c not in held
    }
    return Registry(remaining, registry.capacity, registry.dim)


def save_registry(registry: Registry, json_path) -> None:
    """JSON manifest plus a rank-3 tensor (n_entries, 3, d); bit-exact."""
    base = os.path.splitext(json_path)[0]
    tensor_path = base + ".dytf"
    flat = []
    meta = []
    for c in registry.categories():
        for e in registry.entries_by_category[c]:
            meta.append(
                {
                    "category": e.category,
                    "source": e.source,
                    "score": e.score,
                    "origin": list(e.origin) if e.origin else None,
                    "row": len(flat),
                }
            )
            flat.append(np.stack([e.z_h, e.z_o, e.z_u], axis=0))
    stack = (
        np.stack(flat, axis=0).astype(np.float32)
        if flat
        else np.zeros((0, 3, registry.dim), dtype=np.float32)
    )
    tensorio.write_tensor(stack, tensor_path)
    doc = {
        "format": "registry",
        "version": 1,
        "capacity": registry.capacity,
        "dim": registry.dim,
        "tensor": os.path.basename(tensor_path),
        "entries": meta,
    }
    tmp = f"{json_path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, json_path)


def load_registry(json_path) -> Registry:
    with open(json_path) as fh:
        doc = json.load(fh)
    dim = int(doc["dim"])
    tensor_path = os.path.join(os.path.dirname(json_path) or ".", doc["tensor"])
    stack = tensorio.read_tensor(tensor_path)
    if stack.shape[1:] != (3, dim):
        raise DimensionMismatch(f"registry tensor shape {stack.shape}, expected (*, 3, {dim})")
    pools = {}
    for m in doc["entries"]:
        row = stack[m["row"]]
        entry = RegistryEntry(
            category=int(m["category"]),
            z_h=row[0],
            z_o=row[1],
            z_u=row[2],
            source=m["source"],
            score=m["score"],
            origin=tuple(m["origin"]) if m["origin"] else None,
        )
        pools.setdefault(entry.category, []).append(entry)
    return Registry(pools, int(doc["capacity"]), dim)
