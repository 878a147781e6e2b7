"""Export jobs: feature bundles, signature sets, and pseudolabel likelihoods."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .backends import make_detector, make_embedder, make_llm, make_mllm
from .filtering import filter_indices, pair_keys, union_box
from .formats import write_bundle, write_json_atomic, write_score_file, write_signature_set

IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass
class ExportJob:
    image_dir: str
    out_dir: str
    detector_spec: str = "sidecar"
    embedder_spec: str = "hash:64"
    person_label: str = "person"
    detection_threshold: float = 0.2
    min_keep: int = 3
    max_keep: int = 15
    errors: list = field(default_factory=list)

    def images(self):
        return sorted(
            os.path.join(self.image_dir, n)
            for n in os.listdir(self.image_dir)
            if n.lower().endswith(IMAGE_EXTS)
        )


def _crop(image, box):
    x1, y1, x2, y2 = box
    return image.crop((int(x1), int(y1), int(np.ceil(x2)), int(np.ceil(y2))))


def export_bundles(job: ExportJob):
    """Write one bundle per image; per-image failures are recorded and the
    job continues. Returns the list of written bundle JSON paths."""
    detector = make_detector(job.detector_spec)
    embedder = make_embedder(job.embedder_spec)
    bundle_dir = os.path.join(job.out_dir, "bundles")
    os.makedirs(bundle_dir, exist_ok=True)
    written = []
    for path in job.images():
        image_id = os.path.splitext(os.path.basename(path))[0]
        try:
            image = Image.open(path).convert("RGB")
            detections = detector.detect(path)
            humans, others = filter_indices(
                detections,
                job.person_label,
                threshold=job.detection_threshold,
                min_keep=job.min_keep,
                max_keep=job.max_keep,
            )
            kept = sorted(humans + others)
            crops = {i: embedder.embed_image(_crop(image, detections[i]["box"])) for i in kept}
            unions = {}
            for h, o in pair_keys(humans, others):
                ub = union_box(detections[h]["box"], detections[o]["box"])
                unions[(h, o)] = embedder.embed_image(_crop(image, ub))
            out = os.path.join(bundle_dir, f"{image_id}.json")
            write_bundle(image_id, detections, crops, unions, embedder.dim, out)
            written.append(out)
        except Exception as exc:  # per-image resilience contract
            job.errors.append({"image_id": image_id, "error": f"{type(exc).__name__}: {exc}"})
    write_json_atomic(
        {
            "format": "export-report",
            "images": len(job.images()),
            "bundles": len(written),
            "errors": job.errors,
        },
        os.path.join(job.out_dir, "export_report.json"),
    )
    return written


def export_signatures(
    vocabulary_path, templates, llm_spec, embedder_spec, out_manifest, cache_path=None
):
    """M descriptions per category via the LLM (cached), embedded as the
    signature tensor. LLM failures fall back to the filled templates."""
    embedder = make_embedder(embedder_spec)
    llm = make_llm(llm_spec)
    with open(vocabulary_path) as fh:
        vocab = json.load(fh)
    cats = sorted(vocab["categories"], key=lambda c: c["id"])
    m = len(templates)

    cache = {}
    if cache_path and os.path.exists(cache_path):
        with open(cache_path) as fh:
            cache = json.load(fh)

    descriptions = {}
    degraded = []
    for cat in cats:
        key = str(cat["id"])
        if key in cache:
            descriptions[cat["id"]] = cache[key]
            continue
        prompts = [
            t.replace("{verb}", cat["verb"]).replace("{object}", cat["object"])
            for t in templates
        ]
        try:
            descriptions[cat["id"]] = llm.describe(prompts)
            if getattr(llm, "degraded", False):
                degraded.append(cat["id"])
        except Exception:
            descriptions[cat["id"]] = prompts
            degraded.append(cat["id"])
        cache[str(cat["id"])] = descriptions[cat["id"]]

    if cache_path:
        write_json_atomic(cache, cache_path)

    blocks = np.stack(
        [
            np.stack([embedder.embed_text(d) for d in descriptions[cat["id"]]])
            for cat in cats
        ]
    )
    write_signature_set(
        [{k: cat[k] for k in ("id", "verb", "object", "rare")} for cat in cats],
        m,
        embedder.dim,
        blocks,
        descriptions,
        out_manifest,
    )
    if degraded:
        write_json_atomic(
            {"degraded_categories": sorted(degraded)},
            os.path.splitext(out_manifest)[0] + ".degraded.json",
        )
    return descriptions


def export_mllm_scores(job: ExportJob, vocabulary_path, mllm_spec, out_path):
    """Per (pair, category) yes-likelihood scores, keeping the per-pair
    argmax category. Fails atomically: no partial file on error."""
    detector = make_detector(job.detector_spec)
    mllm = make_mllm(mllm_spec)
    with open(vocabulary_path) as fh:
        vocab = json.load(fh)
    cats = sorted(vocab["categories"], key=lambda c: c["id"])
    records = []
    for path in job.images():
        image_id = os.path.splitext(os.path.basename(path))[0]
        try:
            image = Image.open(path).convert("RGB")
            detections = detector.detect(path)
            humans, others = filter_indices(
                detections,
                job.person_label,
                threshold=job.detection_threshold,
                min_keep=job.min_keep,
                max_keep=job.max_keep,
            )
            for h, o in pair_keys(humans, others):
                ub = union_box(detections[h]["box"], detections[o]["box"])
                crop = _crop(image, ub)
                try:
                    best = None
                    for cat in cats:
                        question = f"Is the person {cat['verb']} the {cat['object']}?"
                        score = mllm.yes_likelihood(crop, question)
                        if best is None or score > best[1]:
                            best = (cat["id"], score)
                except ConnectionError:
                    # unreachable scorer is fatal: no partial output
                    raise
                except Exception as exc:
                    job.errors.append(
                        {"image_id": image_id, "pair": [h, o], "error": str(exc)}
                    )
                    continue
                records.append(
                    {
                        "image_id": image_id,
                        "human": h,
                        "object": o,
                        "category": best[0],
                        "score": best[1],
                    }
                )
        except ConnectionError:
            raise
        except Exception as exc:
            job.errors.append({"image_id": image_id, "error": f"{type(exc).__name__}: {exc}"})
    write_score_file(records, out_path)
    return records
