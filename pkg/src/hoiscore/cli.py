"""Command-line surface.

Subcommands:
    signatures build   assemble a signature manifest from raw embeddings
    registry build     labeled exemplar registry from annotated bundles
    registry pseudo    label-free registry from textual-head pseudolabels
    predict            score pairs, write predictions JSONL
    eval               metrics from predictions + ground truth
    fixtures synth     generate a synthetic desk-scale dataset

Exit codes: 0 ok, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import evaluate, fixtures, registry as registry_mod, tensorio
from .config import load_config
from .errors import HoiError
from .evaluate import PredictionTriplet
from .pairs import load_bundle_dir, proposals_from_bundle
from .scoring import score_pair
from .signatures import SignatureSet, assemble_signature, load_signature_set, save_signature_set
from .vocab import load_vocabulary


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--tau", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda-neg", dest="lambda_neg", type=float)
    p.add_argument("--heads", help="comma list from tf,tc,vi,vc")
    p.add_argument("--no-bias", action="store_true")
    p.add_argument("--no-mhom", action="store_true")
    p.add_argument("--threshold", type=float, help="detection confidence threshold")
    p.add_argument("--pseudo-threshold", dest="pseudo_threshold", type=float)
    p.add_argument("--min-keep", dest="min_keep", type=int)
    p.add_argument("--max-keep", dest="max_keep", type=int)
    p.add_argument("--held-out", help="comma list of held-out category ids")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--j", dest="j_capacity", type=int, help="registry capacity per category")
    p.add_argument("--m", dest="m_rows", type=int, help="signature rows per category")


def _config_from_args(args):
    # `registry pseudo` reads --threshold as the pseudolabel threshold
    threshold_is_pseudo = getattr(args, "threshold_is_pseudo", False)
    overrides = {
        "tau": args.tau,
        "gamma": args.gamma,
        "lambda_neg": args.lambda_neg,
        "detection_threshold": None if threshold_is_pseudo else args.threshold,
        "pseudo_threshold": (
            args.pseudo_threshold
            if args.pseudo_threshold is not None
            else (args.threshold if threshold_is_pseudo else None)
        ),
        "min_keep": args.min_keep,
        "max_keep": args.max_keep,
        "seed": args.seed,
        "jobs": args.jobs,
        "j_capacity": args.j_capacity,
        "m_rows": args.m_rows,
    }
    if args.heads:
        overrides["heads"] = tuple(h.strip() for h in args.heads.split(",") if h.strip())
    if args.no_bias:
        overrides["bias_enable"] = False
    if args.no_mhom:
        overrides["mhom_enable"] = False
    if args.held_out:
        overrides["held_out"] = tuple(int(c) for c in args.held_out.split(","))
    return load_config(args.config, overrides)


def _write_manifest(path, config, **extra):
    doc = {"config": config.to_dict()}
    doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_signatures_build(args):
    config = _config_from_args(args)
    vocab = load_vocabulary(args.vocabulary)
    embeddings = tensorio.read_tensor(args.embeddings)
    with open(args.descriptions) as fh:
        descriptions = json.load(fh)
    if embeddings.ndim != 3 or embeddings.shape[0] != len(vocab):
        raise HoiError(
            f"embeddings tensor shape {embeddings.shape}; expected ({len(vocab)}, M, d)"
        )
    sigs = []
    for cat in vocab.categories:
        sigs.append(
            assemble_signature(
                cat, embeddings[cat.id], descriptions[str(cat.id)], embeddings.shape[1]
            )
        )
    save_signature_set(SignatureSet(sigs), args.out)
    _write_manifest(os.path.splitext(args.out)[0] + ".meta.json", config, output=args.out)
    return 0


def cmd_registry_build(args):
    config = _config_from_args(args)
    vocab = load_vocabulary(args.vocabulary)
    bundles = load_bundle_dir(args.bundles)
    with open(args.annotations) as fh:
        annotations = json.load(fh)
    dim = bundles[0].dim if bundles else 0
    reg = registry_mod.build_labeled(bundles, annotations, config.j_capacity, dim)
    if config.held_out:
        reg = registry_mod.filter_zero_shot(reg, config.held_out, len(vocab))
    registry_mod.save_registry(reg, args.out)
    _write_manifest(
        os.path.splitext(args.out)[0] + ".meta.json", config, entries=len(reg), output=args.out
    )
    return 0


def cmd_registry_pseudo(args):
    config = _config_from_args(args)
    vocab = load_vocabulary(args.vocabulary)
    sigs = load_signature_set(args.signatures, vocab)
    bundles = load_bundle_dir(args.bundles)
    score_source = None
    if args.scores:
        score_source = _score_source_from_file(args.scores)
    reg = registry_mod.build_pseudo(
        bundles,
        sigs,
        vocab.person_label,
        config,
        threshold=config.pseudo_threshold,
        capacity=config.j_capacity,
        score_source=score_source,
    )
    if config.held_out:
        reg = registry_mod.filter_zero_shot(reg, config.held_out, len(vocab))
    registry_mod.save_registry(reg, args.out)
    _write_manifest(
        os.path.splitext(args.out)[0] + ".meta.json", config, entries=len(reg), output=args.out
    )
    return 0


def _score_source_from_file(path):
    """External pseudolabel scores: JSONL of image_id/human/object/category/score."""
    table = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            key = (rec["image_id"], rec["human"], rec["object"])
            cand = (int(rec["category"]), float(rec["score"]))
            if key not in table or cand[1] > table[key][1]:
                table[key] = cand
    return lambda image_id, h, o: table.get((image_id, h, o))


def cmd_predict(args):
    config = _config_from_args(args)
    vocab = load_vocabulary(args.vocabulary)
    sigs = load_signature_set(args.signatures, vocab)
    reg = registry_mod.load_registry(args.registry) if args.registry else None
    if reg is not None and config.held_out:
        reg = registry_mod.filter_zero_shot(reg, config.held_out, len(vocab))
    bundles = load_bundle_dir(args.bundles)

    def predict_bundle(bundle):
        out = []
        for prop in proposals_from_bundle(bundle, vocab.person_label, config):
            for cat_id, score in score_pair(prop, sigs, reg, config):
                if score == float("-inf"):
                    continue
                out.append(
                    PredictionTriplet(
                        image_id=prop.image_id,
                        human_box=prop.human.box,
                        object_box=prop.object.box,
                        category=cat_id,
                        score=score,
                    )
                )
        return out

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            per_image = list(pool.map(predict_bundle, bundles))
    else:
        per_image = [predict_bundle(b) for b in bundles]
    predictions = [p for chunk in per_image for p in chunk]
    evaluate.save_predictions(predictions, args.out)
    _write_manifest(
        os.path.splitext(args.out)[0] + ".meta.json",
        config,
        predictions=len(predictions),
        output=args.out,
    )
    return 0


def cmd_eval(args):
    config = _config_from_args(args)
    vocab = load_vocabulary(args.vocabulary)
    predictions = evaluate.load_predictions(args.predictions)
    ground_truth = evaluate.load_ground_truth(args.ground_truth)
    aps = evaluate.evaluate_categories(predictions, ground_truth, len(vocab))
    metrics = evaluate.aggregate(aps, vocab.rare_ids())
    if config.held_out:
        metrics.update(
            {f"zs_{k}": v for k, v in evaluate.split_seen_unseen(aps, config.held_out).items()}
        )
    print(f"{'metric':<16} value")
    for name, value in metrics.items():
        print(f"{name:<16} {100 * value:6.2f}%")
    print(json.dumps({k: round(v, 6) for k, v in metrics.items()}, sort_keys=True))
    if args.out:
        doc = {
            "metrics": metrics,
            "per_category_ap": {str(c): aps[c] for c in sorted(aps)},
            "config": config.to_dict(),
        }
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
    if args.report_dir:
        from .report import render_report

        base = {k: v for k, v in metrics.items() if not k.startswith("zs_")}
        render_report(aps, base, vocab, args.report_dir)
    return 0


def cmd_fixtures_synth(args):
    config = _config_from_args(args)
    spec = fixtures.FixtureSpec(
        num_categories=args.categories,
        num_objects=args.objects,
        dim=args.dim,
        m_rows=config.m_rows if args.m_rows is None else args.m_rows,
        test_images=args.test_images,
        train_images=args.train_images,
        pairs_per_image=args.pairs_per_image,
        noise=args.noise,
        seed=config.seed,
    )
    fixtures.synth_fixtures(args.out, spec)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="hoiscore")
    sub = parser.add_subparsers(dest="command", required=True)

    sig = sub.add_parser("signatures").add_subparsers(dest="action", required=True)
    p = sig.add_parser("build")
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--embeddings", required=True, help="rank-3 tensor (I, M, d)")
    p.add_argument("--descriptions", required=True, help="JSON map category id -> M strings")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_signatures_build)

    reg = sub.add_parser("registry").add_subparsers(dest="action", required=True)
    p = reg.add_parser("build")
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--bundles", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_registry_build)
    p = reg.add_parser("pseudo")
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--bundles", required=True)
    p.add_argument("--signatures", required=True)
    p.add_argument("--scores", help="optional external pseudolabel score JSONL")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_registry_pseudo, threshold_is_pseudo=True)

    p = sub.add_parser("predict")
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--bundles", required=True)
    p.add_argument("--signatures", required=True)
    p.add_argument("--registry")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval")
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--out")
    p.add_argument("--report-dir", help="write CSV + figures here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    fix = sub.add_parser("fixtures").add_subparsers(dest="action", required=True)
    p = fix.add_parser("synth")
    p.add_argument("--out", required=True)
    p.add_argument("--categories", type=int, default=6)
    p.add_argument("--objects", type=int, default=3)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--test-images", type=int, default=12)
    p.add_argument("--train-images", type=int, default=18)
    p.add_argument("--pairs-per-image", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.0)
    _add_config_flags(p)
    p.set_defaults(func=cmd_fixtures_synth)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except (HoiError, ValueError, OSError) as exc:
        if isinstance(exc, ValueError):
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
