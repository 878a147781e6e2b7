"""Static evaluation reports: per-category CSV plus matplotlib figures."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_category_csv(category_aps, vocab, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category_id", "verb", "object", "rare", "ap"])
        for cat_id in sorted(category_aps):
            cat = vocab.category(cat_id)
            writer.writerow([cat.id, cat.verb, cat.object, int(cat.rare), f"{category_aps[cat_id]:.6f}"])


def render_report(category_aps, metrics, vocab, out_dir):
    """Write per-category AP CSV and two PNG figures into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    write_category_csv(category_aps, vocab, os.path.join(out_dir, "per_category_ap.csv"))

    cats = sorted(category_aps)
    aps = [category_aps[c] for c in cats]
    colors = ["tab:orange" if vocab.category(c).rare else "tab:blue" for c in cats]

    fig, ax = plt.subplots(figsize=(max(6, 0.25 * len(cats)), 4))
    ax.bar(range(len(cats)), aps, color=colors)
    ax.set_xlabel("category id")
    ax.set_ylabel("AP")
    ax.set_ylim(0, 1.05)
    ax.set_title("per-category AP (orange = rare)")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "per_category_ap.png"), dpi=120)
    plt.close(fig)

    names = list(metrics)
    values = [metrics[n] for n in names]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, values, color="tab:green")
    ax.set_ylabel("mAP")
    ax.set_ylim(0, 1.05)
    for i, v in enumerate(values):
        ax.text(i, v + 0.02, f"{100 * v:.2f}%", ha="center", fontsize=9)
    ax.set_title("aggregate metrics")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "aggregates.png"), dpi=120)
    plt.close(fig)
