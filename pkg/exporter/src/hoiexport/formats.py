"""Writers for the scoring engine's on-disk formats.

Deliberately re-implemented here (no shared code with the consumer
package); the schemas are pinned by cross-package conformance tests and
golden files.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

MAGIC = b"DYTF"
VERSION = 1
DTYPE_F32 = 0


def write_tensor(matrix, path) -> None:
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HHI", VERSION, DTYPE_F32, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())
    os.replace(tmp, path)


def tensor_header_size(rank: int) -> int:
    return 4 + 2 + 2 + 4 + 4 * rank


def write_json_atomic(doc, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def write_bundle(image_id, detections, crops, unions, dim, json_path) -> None:
    """detections: list of dicts with box/label/confidence (corner pixels);
    crops: det index -> embedding; unions: (h, o) -> embedding."""
    base = os.path.splitext(json_path)[0]
    tensor_path = base + ".dytf"
    rows = []
    crop_rows = {}
    for idx in sorted(crops):
        crop_rows[str(idx)] = len(rows)
        rows.append(crops[idx])
    union_rows = []
    for key in sorted(unions):
        union_rows.append({"human": key[0], "object": key[1], "row": len(rows)})
        rows.append(unions[key])
    stack = np.stack(rows).astype(np.float32) if rows else np.zeros((0, dim), np.float32)
    write_tensor(stack, tensor_path)
    write_json_atomic(
        {
            "format": "feature-bundle",
            "image_id": image_id,
            "dim": int(dim),
            "tensor": os.path.basename(tensor_path),
            "detections": detections,
            "crop_rows": crop_rows,
            "union_rows": union_rows,
        },
        json_path,
    )


def write_signature_set(categories, rows_per_category, dim, blocks, descriptions, manifest_path):
    """categories: list of dicts id/verb/object/rare; blocks: (I, M, d) array."""
    base = os.path.splitext(manifest_path)[0]
    tensor_path = base + ".dytf"
    write_tensor(blocks, tensor_path)
    hdr = tensor_header_size(3)
    block_bytes = rows_per_category * dim * 4
    write_json_atomic(
        {
            "format": "signature-set",
            "version": 1,
            "dim": int(dim),
            "rows_per_category": int(rows_per_category),
            "tensor": os.path.basename(tensor_path),
            "categories": [
                dict(
                    cat,
                    descriptions=list(descriptions[cat["id"]]),
                    offset=hdr + cat["id"] * block_bytes,
                    length=block_bytes,
                )
                for cat in categories
            ],
        },
        manifest_path,
    )


def write_score_file(records, path) -> None:
    """Pseudolabel likelihood JSONL: image_id/human/object/category/score."""
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True))
            fh.write("\n")
    os.replace(tmp, path)
