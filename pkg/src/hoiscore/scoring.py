"""Multi-head attention scoring of human-object pairs.

Four heads, each a cosine attention with one-hot values over interaction
classes:

    tf  textual fine-grained: all signature rows as keys, union crop query
    tc  textual coarse:       per-category coarse mean as key, union query
    vi  visual instance:      registry human||object keys, z_h||z_o query
    vc  visual contextual:    per-category mean of registry union keys,
                              union query

Raw attention per class is the MEAN similarity over that class's key rows,
so every head lives on the same bounded cosine scale before the
contribution softmax. The negative bias (visual heads only) is the mean
similarity to all other-class rows, negated.

Classes with no keys in a head are masked: they are excluded from the
contribution denominator and from the fused mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import normalize
from .errors import DimensionMismatch, MissingSignature

MASKED = -np.inf
HEAD_IDS = ("tf", "tc", "vi", "vc")
VISUAL_HEADS = ("vi", "vc")


@dataclass(frozen=True)
class HeadInputs:
    head_id: str
    query: np.ndarray            # (d_h,)
    keys: np.ndarray             # (R, d_h)
    key_categories: np.ndarray   # (R,) int
    num_categories: int

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.key_categories, minlength=self.num_categories)


@dataclass(frozen=True)
class ScorePanel:
    head_ids: tuple
    attention: np.ndarray        # (N, I), MASKED where unavailable
    contributions: np.ndarray    # (N, I), 0 where masked
    fused: np.ndarray            # (I,), MASKED where all heads masked
    mask: np.ndarray             # (N, I) bool, True = usable


def build_textual_inputs(kind, proposal, signatures) -> HeadInputs:
    """Key/query assembly for the textual heads."""
    if signatures is None or len(signatures) == 0:
        raise MissingSignature("no signatures loaded")
    if kind == "fine":
        return HeadInputs(
            head_id="tf",
            query=proposal.z_u,
            keys=signatures.fine_keys,
            key_categories=signatures.fine_categories,
            num_categories=len(signatures),
        )
    if kind == "coarse":
        return HeadInputs(
            head_id="tc",
            query=proposal.z_u,
            keys=signatures.coarse_keys,
            key_categories=np.arange(len(signatures)),
            num_categories=len(signatures),
        )
    raise ValueError(f"unknown textual head kind {kind!r}")


def build_visual_inputs(kind, proposal, registry, num_categories) -> HeadInputs:
    """Key/query assembly for the visual heads.

    Categories without registry exemplars simply contribute no key rows and
    end up masked by head_attention.
    """
    if kind == "instance":
        keys, cats = registry.instance_keys()
        query = normalize(np.concatenate([proposal.z_h, proposal.z_o]))
        return HeadInputs(
            head_id="vi",
            query=query,
            keys=keys,
            key_categories=cats,
            num_categories=num_categories,
        )
    if kind == "contextual":
        keys, cats = registry.contextual_keys()
        return HeadInputs(
            head_id="vc",
            query=proposal.z_u,
            keys=keys,
            key_categories=cats,
            num_categories=num_categories,
        )
    raise ValueError(f"unknown visual head kind {kind!r}")


def head_attention(inputs: HeadInputs):
    """Per-class mean query-key similarity.

    Returns (scores, available) where scores is length-I with MASKED at
    classes having no key rows.
    """
    I = inputs.num_categories
    scores = np.full(I, MASKED, dtype=np.float64)
    counts = inputs.class_counts()
    available = counts > 0
    if inputs.keys.shape[0]:
        if inputs.keys.shape[1] != inputs.query.shape[0]:
            raise DimensionMismatch(
                f"query dim {inputs.query.shape[0]} vs key dim {inputs.keys.shape[1]}"
            )
        sims = inputs.keys.astype(np.float64) @ inputs.query.astype(np.float64)
        sums = np.bincount(inputs.key_categories, weights=sims, minlength=I)
        scores[available] = sums[available] / counts[available]
    return scores, available


def negative_bias(inputs: HeadInputs):
    """Mean similarity to other-class key rows, negated.

    Zero for classes with no other-class rows (and for unavailable classes).
    """
    I = inputs.num_categories
    bias = np.zeros(I, dtype=np.float64)
    total = inputs.keys.shape[0]
    if total == 0:
        return bias
    if inputs.keys.shape[1] != inputs.query.shape[0]:
        raise DimensionMismatch(
            f"query dim {inputs.query.shape[0]} vs key dim {inputs.keys.shape[1]}"
        )
    sims = inputs.keys.astype(np.float64) @ inputs.query.astype(np.float64)
    grand = sims.sum()
    counts = inputs.class_counts()
    sums = np.bincount(inputs.key_categories, weights=sims, minlength=I)
    other_counts = total - counts
    nonzero = other_counts > 0
    bias[nonzero] = -(grand - sums[nonzero]) / other_counts[nonzero]
    return bias


def mhom_contributions(attention: np.ndarray, tau: float, mask=None) -> np.ndarray:
    """Per-class head contributions C[h, i] = exp(a/tau) / (1 + sum_k exp(a_k/tau)).

    Computed with max-subtraction so large a/tau never overflows; masked
    entries are excluded from both numerator candidacy and the denominator.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    a = np.asarray(attention, dtype=np.float64)
    if mask is None:
        mask = np.isfinite(a)
    C = np.zeros_like(a)
    n_heads, n_cats = a.shape
    for i in range(n_cats):
        col_mask = mask[:, i]
        if not col_mask.any():
            continue
        col = a[col_mask, i]
        m = col.max()
        ex = np.exp((col - m) / tau)
        denom = np.exp(-m / tau) + ex.sum()
        C[col_mask, i] = ex / denom
    return C


def fuse(attention: np.ndarray, contributions: np.ndarray, mask=None) -> np.ndarray:
    """Fused per-class score: mean over unmasked heads of a * (1 + C).

    Classes with every head masked get the MASKED sentinel.
    """
    a = np.asarray(attention, dtype=np.float64)
    C = np.asarray(contributions, dtype=np.float64)
    if a.shape != C.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {C.shape}")
    if mask is None:
        mask = np.isfinite(a)
    n_eff = mask.sum(axis=0)
    fused = np.full(a.shape[1], MASKED, dtype=np.float64)
    weighted = np.where(mask, a * (1.0 + C), 0.0)
    live = n_eff > 0
    fused[live] = weighted.sum(axis=0)[live] / n_eff[live]
    return fused


def score_panel(proposal, signatures, registry, config) -> ScorePanel:
    """Assemble the enabled heads for one proposal and fuse them."""
    n_cats = len(signatures)
    rows = []
    head_ids = []
    for head in config.heads:
        if head == "tf":
            inputs = build_textual_inputs("fine", proposal, signatures)
        elif head == "tc":
            inputs = build_textual_inputs("coarse", proposal, signatures)
        elif head in VISUAL_HEADS:
            if registry is None:
                continue
            kind = "instance" if head == "vi" else "contextual"
            inputs = build_visual_inputs(kind, proposal, registry, n_cats)
        else:
            raise ValueError(f"unknown head {head!r}")
        scores, available = head_attention(inputs)
        if head in VISUAL_HEADS and config.bias_enable:
            scores = np.where(
                available, scores + config.lambda_neg * negative_bias(inputs), scores
            )
        rows.append(scores)
        head_ids.append(head)
    if not rows:
        raise ValueError("no heads could be built (no signatures and no registry)")
    A = np.stack(rows, axis=0)
    mask = np.isfinite(A)
    if config.mhom_enable:
        C = mhom_contributions(A, config.tau, mask)
    else:
        C = np.zeros_like(A)
    fused = fuse(A, C, mask)
    return ScorePanel(
        head_ids=tuple(head_ids), attention=A, contributions=C, fused=fused, mask=mask
    )


def score_pair(proposal, signatures, registry, config):
    """Ranked (category id, final score) list for one proposal.

    Final score is the fused class score times the pair's detection
    confidence product raised to gamma. Ties break by category id.
    """
    panel = score_panel(proposal, signatures, registry, config)
    conf = (proposal.human.confidence * proposal.object.confidence) ** config.gamma
    finite = np.isfinite(panel.fused)
    final = np.where(finite, panel.fused * conf, MASKED)
    order = sorted(range(len(final)), key=lambda i: (-final[i], i))
    return [(i, float(final[i])) for i in order]
