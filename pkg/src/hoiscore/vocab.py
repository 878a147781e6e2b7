"""Interaction vocabulary: object classes plus (verb, object) categories."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .core import InteractionCategory
from .errors import UnknownCategory


@dataclass(frozen=True)
class Vocabulary:
    person_label: str
    object_labels: tuple
    categories: tuple  # InteractionCategory, ordered by id

    def __post_init__(self):
        ids = [c.id for c in self.categories]
        if ids != list(range(len(ids))):
            raise ValueError("category ids must be contiguous from 0")
        pairs = {(c.verb, c.object) for c in self.categories}
        if len(pairs) != len(self.categories):
            raise ValueError("(verb, object) pairs must be unique")
        for c in self.categories:
            if c.object not in self.object_labels:
                raise UnknownCategory(f"category {c.id} references unknown object {c.object!r}")

    def __len__(self) -> int:
        return len(self.categories)

    def category(self, cat_id: int) -> InteractionCategory:
        if not (0 <= cat_id < len(self.categories)):
            raise UnknownCategory(f"category id {cat_id} outside vocabulary")
        return self.categories[cat_id]

    def rare_ids(self) -> set:
        return {c.id for c in self.categories if c.rare}


def save_vocabulary(vocab: Vocabulary, path) -> None:
    doc = {
        "format": "vocabulary",
        "person_label": vocab.person_label,
        "object_labels": list(vocab.object_labels),
        "categories": [
            {"id": c.id, "verb": c.verb, "object": c.object, "rare": c.rare}
            for c in vocab.categories
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_vocabulary(path) -> Vocabulary:
    with open(path) as fh:
        doc = json.load(fh)
    cats = tuple(
        InteractionCategory(id=c["id"], verb=c["verb"], object=c["object"], rare=bool(c["rare"]))
        for c in sorted(doc["categories"], key=lambda c: c["id"])
    )
    return Vocabulary(
        person_label=doc["person_label"],
        object_labels=tuple(doc["object_labels"]),
        categories=cats,
    )
