"""Exporter command line.

Subcommands:
    bundles      detections + crop/union embeddings per image
    signatures   LLM descriptions + text embeddings per category
    mllm-scores  yes-likelihood pseudolabel scores per pair
"""

from __future__ import annotations

import argparse
import json
import sys

from .export import ExportJob, export_bundles, export_mllm_scores, export_signatures


def _job_args(p):
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--detector", default="sidecar")
    p.add_argument("--embedder", default="hash:64")
    p.add_argument("--person-label", default="person")
    p.add_argument("--threshold", type=float, default=0.2)
    p.add_argument("--min-keep", type=int, default=3)
    p.add_argument("--max-keep", type=int, default=15)


def _job(args, out=None):
    return ExportJob(
        image_dir=args.images,
        out_dir=out if out is not None else args.out,
        detector_spec=args.detector,
        embedder_spec=args.embedder,
        person_label=args.person_label,
        detection_threshold=args.threshold,
        min_keep=args.min_keep,
        max_keep=args.max_keep,
    )


def main(argv=None):
    parser = argparse.ArgumentParser(prog="hoiexport")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bundles")
    _job_args(p)
    p.set_defaults(cmd="bundles")

    p = sub.add_parser("signatures")
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--templates", required=True, help="JSON list of template strings")
    p.add_argument("--llm", default="template")
    p.add_argument("--embedder", default="hash:64")
    p.add_argument("--cache", help="description cache path; re-runs skip the LLM")
    p.add_argument("--out", required=True)
    p.set_defaults(cmd="signatures")

    p = sub.add_parser("mllm-scores")
    _job_args(p)
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--mllm", default="hash")
    p.add_argument("--scores-out", required=True)
    p.set_defaults(cmd="mllm-scores")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code

    try:
        if args.cmd == "bundles":
            job = _job(args)
            written = export_bundles(job)
            print(f"wrote {len(written)} bundles, {len(job.errors)} errors")
            return 0
        if args.cmd == "signatures":
            with open(args.templates) as fh:
                templates = json.load(fh)
            export_signatures(
                args.vocabulary, templates, args.llm, args.embedder, args.out, args.cache
            )
            print(f"wrote {args.out}")
            return 0
        if args.cmd == "mllm-scores":
            job = _job(args)
            records = export_mllm_scores(job, args.vocabulary, args.mllm, args.scores_out)
            print(f"wrote {len(records)} pair scores, {len(job.errors)} errors")
            return 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
