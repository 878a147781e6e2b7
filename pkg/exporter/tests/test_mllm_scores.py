"""Pseudolabel score export: record shape, atomic failure, and end-to-end
consumption by the engine's pseudo-registry builder."""

import json

import pytest

import hoiexport.export as export_mod
from hoiexport.export import ExportJob, export_bundles, export_mllm_scores, export_signatures


def _job(image_folder, out):
    return ExportJob(image_dir=str(image_folder), out_dir=str(out))


def test_score_records_shape(image_folder, vocabulary_file, tmp_path):
    out = tmp_path / "scores.jsonl"
    job = _job(image_folder, tmp_path)
    records = export_mllm_scores(job, str(vocabulary_file), "hash", str(out))
    assert records and job.errors == []

    lines = [json.loads(l) for l in out.read_text().splitlines()]
    assert lines == records
    for rec in lines:
        assert set(rec) == {"image_id", "human", "object", "category", "score"}
        assert rec["category"] in (0, 1, 2, 3)
        assert 0.0 <= rec["score"] <= 1.0
        assert rec["human"] != rec["object"]


def test_deterministic(image_folder, vocabulary_file, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    export_mllm_scores(_job(image_folder, tmp_path), str(vocabulary_file), "hash", str(a))
    export_mllm_scores(_job(image_folder, tmp_path), str(vocabulary_file), "hash", str(b))
    assert a.read_bytes() == b.read_bytes()


class DeadMllm:
    def yes_likelihood(self, image, question):
        raise ConnectionError("scorer unreachable")


def test_unreachable_scorer_leaves_no_partial_file(
    image_folder, vocabulary_file, tmp_path, monkeypatch
):
    monkeypatch.setattr(export_mod, "make_mllm", lambda spec: DeadMllm())
    out = tmp_path / "scores.jsonl"
    with pytest.raises(ConnectionError):
        export_mllm_scores(_job(image_folder, tmp_path), str(vocabulary_file), "x", str(out))
    assert not out.exists()


def test_cli_unreachable_scorer_exits_nonzero(
    image_folder, vocabulary_file, tmp_path, monkeypatch, capsys
):
    from hoiexport.cli import main

    monkeypatch.setattr(export_mod, "make_mllm", lambda spec: DeadMllm())
    out = tmp_path / "scores.jsonl"
    code = main(
        [
            "mllm-scores",
            "--images",
            str(image_folder),
            "--vocabulary",
            str(vocabulary_file),
            "--scores-out",
            str(out),
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 1
    assert not out.exists()
    assert "unreachable" in capsys.readouterr().err


def test_scores_feed_engine_pseudo_registry(image_folder, vocabulary_file, tmp_path):
    """Full handoff: exporter artifacts in, engine pseudo registry out."""
    from hoiscore.cli import main as engine_main
    from hoiscore.registry import load_registry

    export_bundles(_job(image_folder, tmp_path))
    sig_manifest = tmp_path / "signatures.json"
    export_signatures(
        str(vocabulary_file),
        ["a person {verb} a {object}", "someone {verb} a {object}"],
        "template",
        "hash:64",
        str(sig_manifest),
    )
    scores = tmp_path / "scores.jsonl"
    export_mllm_scores(_job(image_folder, tmp_path), str(vocabulary_file), "hash", str(scores))

    reg_out = tmp_path / "registry.json"
    code = engine_main(
        [
            "registry",
            "pseudo",
            "--vocabulary",
            str(vocabulary_file),
            "--bundles",
            str(tmp_path / "bundles"),
            "--signatures",
            str(sig_manifest),
            "--scores",
            str(scores),
            "--threshold",
            "0.0",
            "--out",
            str(reg_out),
        ]
    )
    assert code == 0
    reg = load_registry(str(reg_out))
    assert len(reg) > 0
    assert (tmp_path / "registry.meta.json").exists()
