"""Interaction signatures: per-category M x d matrices of embedded
interaction descriptions plus their coarse mean vector.

The coarse vector is the plain arithmetic mean of the (unit-norm) rows and
is deliberately NOT renormalized, so its norm is at most 1 and the coarse
head's scores stay on the cosine scale.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import tensorio
from .core import InteractionCategory, normalize_rows
from .errors import BadCount, DimensionMismatch, MissingCategory, PlaceholderMissing
from .vocab import Vocabulary

VERB_TOKEN = "{verb}"
OBJECT_TOKEN = "{object}"


@dataclass(frozen=True)
class PromptTemplate:
    """A template string carrying exactly one {verb} and one {object} token."""

    text: str

    def __post_init__(self):
        for token in (VERB_TOKEN, OBJECT_TOKEN):
            if self.text.count(token) != 1:
                raise PlaceholderMissing(f"template {self.text!r} needs exactly one {token}")


def fill_templates(templates, category: InteractionCategory, expected_count=None):
    """Substitute the category's verb and object into every template."""
    if expected_count is not None and len(templates) != expected_count:
        raise BadCount(f"expected {expected_count} templates, got {len(templates)}")
    if not category.verb or not category.object:
        raise ValueError("category verb and object must be nonempty")
    out = []
    for tpl in templates:
        if not isinstance(tpl, PromptTemplate):
            tpl = PromptTemplate(tpl)
        out.append(tpl.text.replace(VERB_TOKEN, category.verb).replace(OBJECT_TOKEN, category.object))
    return out


@dataclass(frozen=True)
class InteractionSignature:
    category: InteractionCategory
    rows: np.ndarray        # (M, d) float32, unit rows
    coarse: np.ndarray      # (d,) float64, mean of rows
    descriptions: tuple


def assemble_signature(category, description_embeddings, descriptions, m_rows) -> InteractionSignature:
    """Normalize the M description embeddings and derive the coarse mean."""
    arr = np.asarray(description_embeddings, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected M x d matrix, got shape {arr.shape}")
    if arr.shape[0] != m_rows:
        raise BadCount(f"category {category.id}: expected {m_rows} rows, got {arr.shape[0]}")
    if len(descriptions) != m_rows:
        raise BadCount(f"category {category.id}: expected {m_rows} descriptions")
    rows = normalize_rows(arr)
    coarse = rows.astype(np.float64).mean(axis=0)
    return InteractionSignature(
        category=category, rows=rows, coarse=coarse, descriptions=tuple(descriptions)
    )


class SignatureSet:
    """Immutable per-category signatures plus stacked key matrices."""

    def __init__(self, signatures):
        sigs = sorted(signatures, key=lambda s: s.category.id)
        ids = [s.category.id for s in sigs]
        if ids != list(range(len(ids))):
            raise MissingCategory(f"signature ids must cover 0..I-1, got {ids}")
        dims = {s.rows.shape[1] for s in sigs}
        if len(dims) != 1:
            raise DimensionMismatch(f"mixed dimensions across signatures: {sorted(dims)}")
        counts = {s.rows.shape[0] for s in sigs}
        if len(counts) != 1:
            raise BadCount(f"mixed row counts across signatures: {sorted(counts)}")
        self.signatures = tuple(sigs)
        self.dim = dims.pop()
        self.m_rows = counts.pop()
        # stacked keys for the fine head: (I*M, d) with repeated category ids
        self.fine_keys = np.concatenate([s.rows for s in sigs], axis=0)
        self.fine_categories = np.repeat(np.arange(len(sigs)), self.m_rows)
        self.coarse_keys = np.stack([s.coarse for s in sigs], axis=0)  # (I, d) float64

    def __len__(self):
        return len(self.signatures)

    def __getitem__(self, cat_id) -> InteractionSignature:
        if not (0 <= cat_id < len(self.signatures)):
            raise MissingCategory(f"no signature for category {cat_id}")
        return self.signatures[cat_id]


def save_signature_set(sigs: SignatureSet, manifest_path) -> None:
    """Write the manifest JSON plus one rank-3 tensor (I, M, d)."""
    base = os.path.splitext(manifest_path)[0]
    tensor_path = base + ".dytf"
    stack = np.stack([s.rows for s in sigs.signatures], axis=0)
    tensorio.write_tensor(stack, tensor_path)
    hdr = tensorio.header_size(3)
    block = sigs.m_rows * sigs.dim * 4
    doc = {
        "format": "signature-set",
        "version": 1,
        "dim": int(sigs.dim),
        "rows_per_category": int(sigs.m_rows),
        "tensor": os.path.basename(tensor_path),
        "categories": [
            {
                "id": s.category.id,
                "verb": s.category.verb,
                "object": s.category.object,
                "rare": s.category.rare,
                "descriptions": list(s.descriptions),
                "offset": hdr + s.category.id * block,
                "length": block,
            }
            for s in sigs.signatures
        ],
    }
    tmp = f"{manifest_path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, manifest_path)


def load_signature_set(manifest_path, vocabulary: Vocabulary = None) -> SignatureSet:
    """Load signatures; validates dimensions, offsets, and category coverage."""
    with open(manifest_path) as fh:
        doc = json.load(fh)
    dim = int(doc["dim"])
    m_rows = int(doc["rows_per_category"])
    tensor_path = os.path.join(os.path.dirname(manifest_path) or ".", doc["tensor"])
    stack = tensorio.read_tensor(tensor_path)
    if stack.ndim != 3 or stack.shape[1] != m_rows or stack.shape[2] != dim:
        raise DimensionMismatch(
            f"tensor shape {stack.shape} disagrees with manifest (I, {m_rows}, {dim})"
        )
    entries = {int(c["id"]): c for c in doc["categories"]}
    n_cats = stack.shape[0]
    expected_ids = range(len(vocabulary) if vocabulary is not None else n_cats)
    hdr = tensorio.header_size(3)
    block = m_rows * dim * 4
    sigs = []
    for cat_id in expected_ids:
        if cat_id not in entries:
            raise MissingCategory(f"manifest lacks category {cat_id}")
        entry = entries[cat_id]
        if cat_id >= n_cats:
            raise MissingCategory(f"tensor lacks block for category {cat_id}")
        if int(entry["offset"]) != hdr + cat_id * block or int(entry["length"]) != block:
            raise DimensionMismatch(f"category {cat_id}: block offset/length inconsistent")
        category = (
            vocabulary.category(cat_id)
            if vocabulary is not None
            else InteractionCategory(
                id=cat_id, verb=entry["verb"], object=entry["object"], rare=bool(entry["rare"])
            )
        )
        rows = stack[cat_id]
        norms = np.linalg.norm(rows.astype(np.float64), axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-5):
            raise DimensionMismatch(f"category {cat_id}: stored rows are not unit-norm")
        if len(entry["descriptions"]) != m_rows:
            raise BadCount(f"category {cat_id}: expected {m_rows} descriptions")
        coarse = rows.astype(np.float64).mean(axis=0)
        sigs.append(
            InteractionSignature(
                category=category,
                rows=rows,
                coarse=coarse,
                descriptions=tuple(entry["descriptions"]),
            )
        )
    return SignatureSet(sigs)
