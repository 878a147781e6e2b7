"""Pluggable model backends.

Every backend is selected by a spec string of the form "kind" or
"kind:argument". The deterministic "hash" embedder and the "sidecar"
detector run with no model runtime at all, which keeps the export pipeline
testable offline; real checkpoints plug in behind the same interfaces.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np
from PIL import Image


def _hash_vector(payload: bytes, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    return (v / np.linalg.norm(v)).astype(np.float32)


class HashEmbedder:
    """Deterministic stand-in for a CLIP-style dual encoder.

    Images and texts map to unit vectors derived from a content hash; equal
    inputs always embed identically.
    """

    def __init__(self, dim=64):
        self.dim = dim

    def embed_image(self, image: Image.Image) -> np.ndarray:
        return _hash_vector(b"img:" + image.tobytes(), self.dim)

    def embed_text(self, text: str) -> np.ndarray:
        return _hash_vector(b"txt:" + text.encode(), self.dim)


class ClipEmbedder:
    """CLIP via huggingface transformers; requires local weights."""

    def __init__(self, checkpoint="openai/clip-vit-base-patch16"):
        from transformers import CLIPModel, CLIPProcessor  # lazy, heavy

        self.model = CLIPModel.from_pretrained(checkpoint)
        self.processor = CLIPProcessor.from_pretrained(checkpoint)
        self.dim = self.model.config.projection_dim

    def embed_image(self, image):
        import torch

        with torch.no_grad():
            inputs = self.processor(images=image, return_tensors="pt")
            feat = self.model.get_image_features(**inputs)[0]
        v = feat.numpy().astype(np.float64)
        return (v / np.linalg.norm(v)).astype(np.float32)

    def embed_text(self, text):
        import torch

        with torch.no_grad():
            inputs = self.processor(text=[text], return_tensors="pt", padding=True)
            feat = self.model.get_text_features(**inputs)[0]
        v = feat.numpy().astype(np.float64)
        return (v / np.linalg.norm(v)).astype(np.float32)


class SidecarDetector:
    """Reads detections from `<image>.detections.json` next to each image.

    Sidecar schema: list of {"box": [x1,y1,x2,y2], "label": str,
    "confidence": float}. Lets a detector run once elsewhere and be replayed
    deterministically.
    """

    def detect(self, image_path):
        sidecar = os.path.splitext(image_path)[0] + ".detections.json"
        with open(sidecar) as fh:
            return json.load(fh)


class TorchvisionDetector:
    """Faster R-CNN from torchvision with COCO labels; requires weights."""

    def __init__(self, score_floor=0.05):
        import torchvision

        weights = torchvision.models.detection.FasterRCNN_ResNet50_FPN_Weights.DEFAULT
        self.model = torchvision.models.detection.fasterrcnn_resnet50_fpn(weights=weights)
        self.model.eval()
        self.labels = weights.meta["categories"]
        self.score_floor = score_floor

    def detect(self, image_path):
        import torch
        import torchvision.transforms.functional as F

        img = Image.open(image_path).convert("RGB")
        with torch.no_grad():
            out = self.model([F.to_tensor(img)])[0]
        dets = []
        for box, label, score in zip(out["boxes"], out["labels"], out["scores"]):
            if float(score) < self.score_floor:
                continue
            dets.append(
                {
                    "box": [float(v) for v in box],
                    "label": self.labels[int(label)],
                    "confidence": float(score),
                }
            )
        return dets


class TemplateLLM:
    """Degraded-mode describer: descriptions are the filled templates."""

    degraded = True

    def describe(self, prompts):
        return list(prompts)


class HttpLLM:
    """POSTs prompts to a completion endpoint, one description per prompt."""

    degraded = False

    def __init__(self, endpoint):
        self.endpoint = endpoint

    def describe(self, prompts):
        import requests

        out = []
        for prompt in prompts:
            resp = requests.post(self.endpoint, json={"prompt": prompt}, timeout=60)
            resp.raise_for_status()
            out.append(resp.json()["text"])
        return out


class HashMllm:
    """Deterministic stand-in for a yes-likelihood multimodal scorer."""

    def yes_likelihood(self, image: Image.Image, question: str) -> float:
        payload = b"mllm:" + image.tobytes() + question.encode()
        digest = hashlib.sha256(payload).digest()
        return int.from_bytes(digest[:4], "little") / 0xFFFFFFFF


class HttpMllm:
    """Asks a multimodal endpoint for the positive-answer likelihood."""

    def __init__(self, endpoint):
        self.endpoint = endpoint

    def yes_likelihood(self, image, question):
        import base64
        import io

        import requests

        buf = io.BytesIO()
        image.save(buf, format="PNG")
        resp = requests.post(
            self.endpoint,
            json={"image": base64.b64encode(buf.getvalue()).decode(), "question": question},
            timeout=120,
        )
        resp.raise_for_status()
        return float(resp.json()["yes_likelihood"])


def make_embedder(spec: str):
    kind, _, arg = spec.partition(":")
    if kind == "hash":
        return HashEmbedder(dim=int(arg) if arg else 64)
    if kind == "clip":
        return ClipEmbedder(arg) if arg else ClipEmbedder()
    raise ValueError(f"unknown embedder spec {spec!r}")


def make_detector(spec: str):
    kind, _, arg = spec.partition(":")
    if kind == "sidecar":
        return SidecarDetector()
    if kind == "torchvision":
        return TorchvisionDetector(float(arg) if arg else 0.05)
    raise ValueError(f"unknown detector spec {spec!r}")


def make_llm(spec: str):
    kind, _, arg = spec.partition(":")
    if kind == "template":
        return TemplateLLM()
    if kind == "http":
        return HttpLLM(arg)
    raise ValueError(f"unknown LLM spec {spec!r}")


def make_mllm(spec: str):
    kind, _, arg = spec.partition(":")
    if kind == "hash":
        return HashMllm()
    if kind == "http":
        return HttpMllm(arg)
    raise ValueError(f"unknown MLLM spec {spec!r}")
