"""Synthetic desk-scale dataset generator.

Plants one unit direction per interaction category (orthonormal when the
embedding dimension allows), then emits signatures, train/test feature
bundles, registry annotations, and exact ground truth whose embeddings
point at the true category's direction plus Gaussian noise. At zero noise
the true category strictly dominates every pair's score ranking.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from .core import Box, Detection, InteractionCategory, normalize
from .pairs import FeatureBundle, save_bundle
from .signatures import (
    PromptTemplate,
    SignatureSet,
    assemble_signature,
    fill_templates,
    save_signature_set,
)
from .vocab import Vocabulary, save_vocabulary

TEMPLATE_POOL = [
    "a photo of a person {verb} a {object}",
    "someone {verb} a {object} outdoors",
    "a person carefully {verb} the {object}",
    "the {object} is being {verb} by a person",
    "an image showing a person {verb} a {object}",
    "a close-up of a person {verb} a {object}",
    "a person {verb} a {object} in a room",
    "a candid shot of a person {verb} a {object}",
]


@dataclass(frozen=True)
class FixtureSpec:
    num_categories: int = 6
    num_objects: int = 3
    dim: int = 32
    m_rows: int = 8
    test_images: int = 12
    train_images: int = 18
    pairs_per_image: int = 3
    noise: float = 0.0
    signature_noise: float = None  # defaults to noise
    rare_fraction: float = 0.25
    seed: int = 0

    def resolved_signature_noise(self):
        return self.noise if self.signature_noise is None else self.signature_noise


def _planted_directions(rng, num, dim):
    if dim >= num:
        mat = rng.standard_normal((dim, num))
        q, _ = np.linalg.qr(mat)
        return q.T[:num]
    dirs = rng.standard_normal((num, dim))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _noisy(rng, direction, noise):
    if noise <= 0:
        return normalize(direction)
    return normalize(direction + noise * rng.standard_normal(direction.shape))


def make_vocabulary(spec: FixtureSpec) -> Vocabulary:
    objects = tuple(f"obj{i}" for i in range(spec.num_objects))
    n_rare = max(1, int(round(spec.rare_fraction * spec.num_categories)))
    cats = tuple(
        InteractionCategory(
            id=i,
            verb=f"verb{i}",
            object=objects[i % spec.num_objects],
            rare=i < n_rare,
        )
        for i in range(spec.num_categories)
    )
    return Vocabulary(person_label="person", object_labels=("person",) + objects, categories=cats)


def make_signatures(spec, vocab, directions, rng) -> SignatureSet:
    templates = [
        PromptTemplate(TEMPLATE_POOL[i % len(TEMPLATE_POOL)]) for i in range(spec.m_rows)
    ]
    noise = spec.resolved_signature_noise()
    sigs = []
    for cat in vocab.categories:
        descriptions = fill_templates(templates, cat, expected_count=spec.m_rows)
        rows = np.stack(
            [_noisy(rng, directions[cat.id], noise) for _ in range(spec.m_rows)], axis=0
        )
        sigs.append(assemble_signature(cat, rows, descriptions, spec.m_rows))
    return SignatureSet(sigs)


def _tile_box(slot):
    # non-overlapping 80x80 tiles on a 6-wide grid; keeps IoU between
    # distinct detections exactly 0 so evaluation matching is unambiguous
    col, row = slot % 6, slot // 6
    x, y = 10 + 100 * col, 10 + 100 * row
    return Box(x, y, x + 80, y + 80)


def _make_image(spec, vocab, directions, person_dir, rng, image_id):
    """One human, pairs_per_image objects, one GT category per pair."""
    cats = rng.choice(spec.num_categories, size=spec.pairs_per_image, replace=False)
    detections = []
    crops = {}
    human_box = _tile_box(0)
    detections.append(
        Detection(box=human_box, label=vocab.person_label, confidence=float(rng.uniform(0.6, 1.0)))
    )
    crops[0] = _noisy(rng, person_dir, spec.noise)
    gts = []
    unions = {}
    for slot, cat_id in enumerate(cats, start=1):
        cat = vocab.category(int(cat_id))
        box = _tile_box(slot)
        detections.append(
            Detection(box=box, label=cat.object, confidence=float(rng.uniform(0.6, 1.0)))
        )
        crops[slot] = _noisy(rng, directions[cat.id], spec.noise)
        gts.append({"human": 0, "object": slot, "category": cat.id})
    # union embeddings for every enumerable pair (single human -> all objects)
    for slot, cat_id in enumerate(cats, start=1):
        unions[(0, slot)] = _noisy(rng, directions[int(cat_id)], spec.noise)
    bundle = FeatureBundle(image_id, detections, crops, unions, spec.dim)
    return bundle, gts


def synth_fixtures(out_dir, spec: FixtureSpec):
    """Write a complete on-disk dataset; deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    os.makedirs(out_dir, exist_ok=True)
    vocab = make_vocabulary(spec)
    directions = _planted_directions(rng, spec.num_categories, spec.dim)
    person_dir = normalize(rng.standard_normal(spec.dim))

    save_vocabulary(vocab, os.path.join(out_dir, "vocabulary.json"))
    sigs = make_signatures(spec, vocab, directions, rng)
    save_signature_set(sigs, os.path.join(out_dir, "signatures.json"))

    for split, count in (("train", spec.train_images), ("test", spec.test_images)):
        split_dir = os.path.join(out_dir, split, "bundles")
        os.makedirs(split_dir, exist_ok=True)
        annotations = []
        ground_truth = []
        for n in range(count):
            image_id = f"{split}_{n:04d}"
            bundle, gts = _make_image(spec, vocab, directions, person_dir, rng, image_id)
            save_bundle(bundle, os.path.join(split_dir, f"{image_id}.json"))
            for gt in gts:
                human = bundle.detections[gt["human"]]
                obj = bundle.detections[gt["object"]]
                record = {
                    "image_id": image_id,
                    "human_box": human.box.as_list(),
                    "object_box": obj.box.as_list(),
                    "category": gt["category"],
                }
                annotations.append(record)
                ground_truth.append(record)
        name = "annotations.json" if split == "train" else "ground_truth.json"
        with open(os.path.join(out_dir, split, name), "w") as fh:
            json.dump(annotations if split == "train" else ground_truth, fh, indent=1)
            fh.write("\n")

    with open(os.path.join(out_dir, "fixture_manifest.json"), "w") as fh:
        json.dump({"format": "fixture-manifest", "spec": asdict(spec)}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return vocab, sigs
