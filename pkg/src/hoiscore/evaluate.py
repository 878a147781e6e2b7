"""Interaction-detection evaluation: greedy triplet matching, all-point
interpolated average precision, and Rare/Non-rare/Full/AFull aggregation.

A prediction is a true positive iff some not-yet-matched ground truth of the
same category in the same image has human IoU >= 0.5 AND object IoU >= 0.5.
Predictions claim ground truths in score order (ties broken by image id,
then insertion order); each ground truth is matched at most once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Box, iou
from .errors import EmptySplit


@dataclass(frozen=True)
class GroundTruthTriplet:
    image_id: str
    human_box: Box
    object_box: Box
    category: int


@dataclass(frozen=True)
class PredictionTriplet:
    image_id: str
    human_box: Box
    object_box: Box
    category: int
    score: float

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise ValueError(f"non-finite prediction score {self.score}")


def match_category(predictions, ground_truths, iou_threshold=0.5):
    """TP/FP flag per prediction, in ranked order.

    Returns (flags, ranked_predictions). Within an image, a prediction
    claims the unmatched ground truth with the highest min(human IoU,
    object IoU) among those clearing the threshold on both boxes.
    """
    ranked = sorted(
        enumerate(predictions), key=lambda t: (-t[1].score, t[1].image_id, t[0])
    )
    gt_by_image = {}
    for gi, gt in enumerate(ground_truths):
        gt_by_image.setdefault(gt.image_id, []).append((gi, gt))
    matched = set()
    flags = []
    for _, pred in ranked:
        best_gi, best_overlap = None, 0.0
        for gi, gt in gt_by_image.get(pred.image_id, ()):
            if gi in matched:
                continue
            overlap = min(iou(pred.human_box, gt.human_box), iou(pred.object_box, gt.object_box))
            if overlap >= iou_threshold and overlap > best_overlap:
                best_gi, best_overlap = gi, overlap
        if best_gi is not None:
            matched.add(best_gi)
            flags.append(True)
        else:
            flags.append(False)
    return flags, [p for _, p in ranked]


def average_precision(flags, n_gt):
    """All-point interpolated AP (area under the precision envelope)."""
    if n_gt <= 0:
        return 0.0
    tp = 0
    points = []
    for rank, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
            points.append((tp / n_gt, tp / rank))
    ap = 0.0
    prev_recall = 0.0
    # precision envelope: at each recall step take the max precision at or
    # beyond it, which for TP-ranked points is the running max from the right
    best = 0.0
    envelope = []
    for recall, precision in reversed(points):
        best = max(best, precision)
        envelope.append((recall, best))
    for recall, precision in reversed(envelope):
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def evaluate_categories(predictions, ground_truths, num_categories, iou_threshold=0.5):
    """Per-category AP over categories present in the ground truth.

    Returns dict category -> AP; categories with no ground truth are
    omitted (excluded from every aggregate).
    """
    preds_by_cat = {}
    for p in predictions:
        preds_by_cat.setdefault(p.category, []).append(p)
    gts_by_cat = {}
    for g in ground_truths:
        gts_by_cat.setdefault(g.category, []).append(g)
    aps = {}
    for cat, gts in gts_by_cat.items():
        flags, _ = match_category(preds_by_cat.get(cat, []), gts, iou_threshold)
        aps[cat] = average_precision(flags, len(gts))
    return aps


def aggregate(category_aps, rare_ids):
    """Rare / non-rare / full / afull means over evaluable categories."""
    rare = [ap for c, ap in category_aps.items() if c in rare_ids]
    nonrare = [ap for c, ap in category_aps.items() if c not in rare_ids]
    if not rare or not nonrare:
        raise EmptySplit("rare or non-rare split has no evaluable categories")
    rare_map = float(np.mean(rare))
    nonrare_map = float(np.mean(nonrare))
    full_map = float(np.mean(list(category_aps.values())))
    return {
        "rare_mAP": rare_map,
        "nonrare_mAP": nonrare_map,
        "full_mAP": full_map,
        "afull_mAP": (rare_map + nonrare_map) / 2.0,
    }


def split_seen_unseen(category_aps, held_out):
    """Seen/unseen means for a zero-shot hold-out."""
    held = set(held_out)
    seen = [ap for c, ap in category_aps.items() if c not in held]
    unseen = [ap for c, ap in category_aps.items() if c in held]
    if not seen or not unseen:
        raise EmptySplit("seen or unseen split has no evaluable categories")
    seen_map = float(np.mean(seen))
    unseen_map = float(np.mean(unseen))
    return {
        "seen_mAP": seen_map,
        "unseen_mAP": unseen_map,
        "afull_mAP": (seen_map + unseen_map) / 2.0,
        "full_mAP": float(np.mean(list(category_aps.values()))),
    }


def load_ground_truth(path):
    with open(path) as fh:
        doc = json.load(fh)
    return [
        GroundTruthTriplet(
            image_id=g["image_id"],
            human_box=Box(*g["human_box"]),
            object_box=Box(*g["object_box"]),
            category=int(g["category"]),
        )
        for g in doc
    ]


def load_predictions(path):
    preds = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            p = json.loads(line)
            preds.append(
                PredictionTriplet(
                    image_id=p["image_id"],
                    human_box=Box(*p["human_box"]),
                    object_box=Box(*p["object_box"]),
                    category=int(p["category"]),
                    score=float(p["score"]),
                )
            )
    return preds


def save_predictions(predictions, path):
    with open(path, "w") as fh:
        for p in predictions:
            fh.write(
                json.dumps(
                    {
                        "image_id": p.image_id,
                        "human_box": p.human_box.as_list(),
                        "object_box": p.object_box.as_list(),
                        "category": p.category,
                        "score": p.score,
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")
