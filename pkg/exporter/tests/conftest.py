import json

import numpy as np
import pytest
from PIL import Image

PERSON = "person"


def _paint(rng, size=(200, 150)):
    arr = rng.integers(0, 255, size=(size[1], size[0], 3), dtype=np.uint8)
    return Image.fromarray(arr, "RGB")


@pytest.fixture(scope="session")
def image_folder(tmp_path_factory):
    """10 images with sidecar detections: 1-2 people plus objects each."""
    rng = np.random.default_rng(7)
    d = tmp_path_factory.mktemp("images")
    for n in range(10):
        img = _paint(rng)
        img.save(d / f"img{n:02d}.png")
        dets = [
            {"box": [5, 5, 60, 80], "label": PERSON, "confidence": float(rng.uniform(0.5, 1))},
        ]
        if n % 2:
            dets.append(
                {"box": [70, 10, 120, 70], "label": PERSON, "confidence": float(rng.uniform(0.5, 1))}
            )
        for k in range(int(rng.integers(1, 4))):
            x = 10 + 40 * k
            dets.append(
                {
                    "box": [x, 90, x + 30, 130],
                    "label": rng.choice(["horse", "cup", "bicycle"]).item(),
                    "confidence": float(rng.uniform(0.05, 1.0)),
                }
            )
        (d / f"img{n:02d}.detections.json").write_text(json.dumps(dets))
    return d


@pytest.fixture(scope="session")
def vocabulary_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("vocab")
    doc = {
        "format": "vocabulary",
        "person_label": PERSON,
        "object_labels": [PERSON, "horse", "cup", "bicycle"],
        "categories": [
            {"id": 0, "verb": "ride", "object": "horse", "rare": False},
            {"id": 1, "verb": "wash", "object": "horse", "rare": True},
            {"id": 2, "verb": "hold", "object": "cup", "rare": False},
            {"id": 3, "verb": "repair", "object": "bicycle", "rare": True},
        ],
    }
    path = d / "vocabulary.json"
    path.write_text(json.dumps(doc))
    return path
