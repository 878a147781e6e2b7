"""Detection filtering and pair enumeration, duplicated from the scoring
engine so the exporter knows which union crops to embed before the engine
ever runs. Pinned against the engine by golden-file tests.
"""

from __future__ import annotations


def filter_indices(detections, person_label, threshold=0.2, min_keep=3, max_keep=15):
    """(human indices, non-human indices) after threshold/min/max sampling.

    detections: list of dicts with "label" and "confidence".
    """

    def keep(indices):
        ranked = sorted(indices, key=lambda i: (-detections[i]["confidence"], i))
        above = [i for i in ranked if detections[i]["confidence"] >= threshold]
        below = [i for i in ranked if detections[i]["confidence"] < threshold]
        kept = above
        if len(kept) < min_keep:
            kept = kept + below[: min_keep - len(kept)]
        return kept[:max_keep]

    humans = keep([i for i, d in enumerate(detections) if d["label"] == person_label])
    others = keep([i for i, d in enumerate(detections) if d["label"] != person_label])
    return humans, others


def pair_keys(humans, others):
    """Ordered (human, object) index pairs, self-pairs excluded."""
    kept = sorted(humans + others)
    return [(h, o) for h in sorted(humans) for o in kept if o != h]


def union_box(a, b):
    return [min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3])]
