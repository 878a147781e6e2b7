"""Acceptance suite: one test per criterion, each printing a pass line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
lines.
"""

import json
import struct
import time
from dataclasses import replace

import numpy as np
import pytest

from hoiscore import tensorio
from hoiscore.cli import main
from hoiscore.config import RunConfig
from hoiscore.errors import BadMagic, BadVersion, TruncatedPayload
from hoiscore.evaluate import aggregate, average_precision, match_category, split_seen_unseen
from hoiscore.fixtures import FixtureSpec, synth_fixtures
from hoiscore.pairs import attach_features, load_bundle_dir
from hoiscore.registry import build_pseudo, load_registry, pseudo_candidates, save_registry
from hoiscore.scoring import mhom_contributions, score_pair
from hoiscore.signatures import load_signature_set
from hoiscore.vocab import load_vocabulary

from test_evaluate import ref_ap, ref_flags, random_boxes
from test_evaluate import GroundTruthTriplet, PredictionTriplet
from test_scoring import naive_score_pair, random_world


def ok(name):
    print(f"\nACCEPTANCE PASS: {name}")


def test_table1_aggregation_arithmetic():
    start = time.monotonic()
    aps = {i: 0.3422 for i in range(138)}
    aps.update({i: 0.2646 for i in range(138, 600)})
    out = aggregate(aps, rare_ids=set(range(138)))
    assert out["full_mAP"] * 100 == pytest.approx(28.24, abs=0.01)
    assert out["afull_mAP"] * 100 == pytest.approx(30.34, abs=0.01)

    aps = {i: 0.2761 for i in range(138)}
    aps.update({i: 0.2448 for i in range(138, 600)})
    out = aggregate(aps, rare_ids=set(range(138)))
    assert out["full_mAP"] * 100 == pytest.approx(25.20, abs=0.01)
    assert out["afull_mAP"] * 100 == pytest.approx(26.04, abs=0.01)
    assert time.monotonic() - start < 1.0
    ok("aggregation arithmetic (rare/non-rare rows)")


def test_table2_zero_shot_aggregation():
    held = set(range(120))
    aps = {i: 0.3036 for i in held}
    aps.update({i: 0.2396 for i in range(120, 600)})
    out = split_seen_unseen(aps, held_out=held)
    assert out["seen_mAP"] * 100 == pytest.approx(23.96, abs=0.01)
    assert out["unseen_mAP"] * 100 == pytest.approx(30.36, abs=0.01)
    assert out["afull_mAP"] * 100 == pytest.approx(27.16, abs=0.01)
    ok("zero-shot seen/unseen aggregation")


def test_contribution_matrix_oracle():
    start = time.monotonic()
    rng = np.random.default_rng(2024)
    tau = 0.1
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        i = int(rng.integers(1, 12))
        a = rng.uniform(-1.0, 1.5, size=(n, i))
        C = mhom_contributions(a, tau=tau)
        literal = np.exp(a / tau) / (1.0 + np.exp(a / tau).sum(axis=0, keepdims=True))
        np.testing.assert_allclose(C, literal, atol=1e-9)
        assert np.all(C > 0) and np.all(C < 1)
        assert np.all(C.sum(axis=0) < 1)
    assert time.monotonic() - start < 5.0
    ok("contribution matrix oracle (1000 random panels)")


def test_head_and_bias_oracle():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        sig_set, registry, entries, proposal = random_world(rng)
        config = RunConfig(
            tau=float(rng.uniform(0.05, 1.0)),
            gamma=float(rng.choice([0.0, 1.0])),
        )
        ranked = score_pair(proposal, sig_set, registry, config)
        got = np.full(len(sig_set), -np.inf)
        for c, s in ranked:
            got[c] = s
        if registry is None:
            config = replace(config, heads=("tf", "tc"))
        expect = naive_score_pair(
            proposal, [s.rows for s in sig_set.signatures], entries, config, len(sig_set)
        )
        np.testing.assert_allclose(got, expect, atol=1e-6)
    ok("head/bias oracle (100 seeded naive comparisons)")


HARD = dict(
    num_categories=24, num_objects=6, dim=16, m_rows=2,
    pairs_per_image=4, test_images=16, train_images=30,
)


def _pipeline(d, heads=None, registry=True):
    d = str(d)
    args = [
        "predict", "--vocabulary", f"{d}/vocabulary.json", "--bundles", f"{d}/test/bundles",
        "--signatures", f"{d}/signatures.json", "--out", f"{d}/predictions.jsonl",
    ]
    if registry:
        args += ["--registry", f"{d}/registry.json"]
    if heads:
        args += ["--heads", heads]
    assert main(args) == 0
    assert main([
        "eval", "--vocabulary", f"{d}/vocabulary.json",
        "--predictions", f"{d}/predictions.jsonl",
        "--ground-truth", f"{d}/test/ground_truth.json", "--out", f"{d}/metrics.json",
    ]) == 0
    return json.loads(open(f"{d}/metrics.json").read())["metrics"]["full_mAP"]


def test_synthetic_end_to_end(tmp_path):
    # zero noise: exactly 100% through the CLI path
    d = tmp_path / "clean"
    assert main(["fixtures", "synth", "--out", str(d), "--seed", "0", "--noise", "0"]) == 0
    assert main([
        "registry", "build", "--vocabulary", f"{d}/vocabulary.json",
        "--bundles", f"{d}/train/bundles", "--annotations", f"{d}/train/annotations.json",
        "--out", f"{d}/registry.json",
    ]) == 0
    assert _pipeline(d) == 1.0

    # noise 0.2: four heads beat the tf-only ablation on all 5 seeds
    wins = []
    for seed in range(5):
        d = tmp_path / f"noisy{seed}"
        args = ["fixtures", "synth", "--out", str(d), "--seed", str(seed), "--noise", "0.2"]
        for k, v in HARD.items():
            flag = {"num_categories": "categories", "num_objects": "objects",
                    "m_rows": "m", "pairs_per_image": "pairs-per-image",
                    "test_images": "test-images", "train_images": "train-images",
                    "dim": "dim"}[k]
            args += [f"--{flag}", str(v)]
        assert main(args) == 0
        assert main([
            "registry", "build", "--vocabulary", f"{d}/vocabulary.json",
            "--bundles", f"{d}/train/bundles", "--annotations", f"{d}/train/annotations.json",
            "--out", f"{d}/registry.json",
        ]) == 0
        four = _pipeline(d)
        tf_only = _pipeline(d, heads="tf", registry=False)
        wins.append(four > tf_only)
    assert wins == [True] * 5
    ok("synthetic end-to-end (100% clean; 4-head > tf-only 5/5 at noise 0.2)")


def test_pseudolabel_soundness(tmp_path):
    spec = FixtureSpec(num_categories=5, num_objects=5, dim=16, m_rows=3,
                       train_images=24, test_images=4, pairs_per_image=3,
                       noise=0.1, seed=11)
    synth_fixtures(tmp_path, spec)
    vocab = load_vocabulary(tmp_path / "vocabulary.json")
    sigs = load_signature_set(tmp_path / "signatures.json", vocab)
    bundles = load_bundle_dir(tmp_path / "train" / "bundles")
    config = RunConfig()

    cands = pseudo_candidates(bundles, sigs, vocab.person_label, config)
    admitted = {t: {e.origin for e in cands if e.score >= t} for t in (0.5, 0.9)}
    assert admitted[0.9] <= admitted[0.5]

    by_image = {b.image_id: b for b in bundles}
    textual = replace(config, heads=("tf", "tc"), gamma=0.0)
    for thr in (0.5, 0.9):
        reg = build_pseudo(bundles, sigs, vocab.person_label, config,
                           threshold=thr, capacity=8)
        for cat in reg.categories():
            entries = reg.entries(cat)
            assert len(entries) <= 8
            for e in entries:
                assert e.score >= thr
                prop = attach_features([e.origin[1:]], by_image[e.origin[0]])[0]
                best_cat, best_score = score_pair(prop, sigs, None, textual)[0]
                assert best_cat == e.category
                assert best_score == pytest.approx(e.score, abs=1e-5)
    ok("pseudolabel soundness (superset, revalidation, capacity)")


def test_evaluator_oracle():
    rng = np.random.default_rng(99)
    for _ in range(200):
        images = [f"im{i}" for i in range(rng.integers(1, 5))]
        gts = [
            GroundTruthTriplet(str(rng.choice(images)), random_boxes(rng), random_boxes(rng), 0)
            for _ in range(rng.integers(0, 4))
        ]
        preds = [
            PredictionTriplet(
                str(rng.choice(images)), random_boxes(rng), random_boxes(rng), 0,
                float(np.round(rng.uniform(0, 1), 2)),
            )
            for _ in range(rng.integers(0, 7))
        ]
        flags, _ = match_category(preds, gts)
        assert flags == ref_flags(preds, gts)
        assert average_precision(flags, len(gts)) == pytest.approx(
            ref_ap(flags, len(gts)), abs=1e-9
        )
    assert average_precision([True, False, True], 2) == pytest.approx(0.8333, abs=1e-4)
    ok("evaluator oracle (200 random tiny sets + hand case)")


def test_io_round_trips_and_corruption(tmp_path):
    rng = np.random.default_rng(5)
    mat = rng.standard_normal((4, 7)).astype(np.float32)
    p = tmp_path / "t.dytf"
    tensorio.write_tensor(mat, p)
    assert tensorio.read_tensor(p).tobytes() == mat.tobytes()

    (tmp_path / "bad_magic.dytf").write_bytes(b"XXXX" + b"\0" * 16)
    with pytest.raises(BadMagic):
        tensorio.read_tensor(tmp_path / "bad_magic.dytf")
    (tmp_path / "bad_ver.dytf").write_bytes(
        tensorio.MAGIC + struct.pack("<HHI", 9, 0, 1) + struct.pack("<I", 0)
    )
    with pytest.raises(BadVersion):
        tensorio.read_tensor(tmp_path / "bad_ver.dytf")
    (tmp_path / "short.dytf").write_bytes(
        tensorio.MAGIC + struct.pack("<HHI", 1, 0, 1) + struct.pack("<I", 4) + b"\0" * 8
    )
    with pytest.raises(TruncatedPayload):
        tensorio.read_tensor(tmp_path / "short.dytf")

    # registry round trip, bit exact
    spec = FixtureSpec(num_categories=4, num_objects=4, dim=8, m_rows=2,
                       train_images=10, test_images=2, noise=0.1, seed=3)
    d = tmp_path / "fix"
    synth_fixtures(d, spec)
    vocab = load_vocabulary(d / "vocabulary.json")
    sigs = load_signature_set(d / "signatures.json", vocab)
    bundles = load_bundle_dir(d / "train" / "bundles")
    reg = build_pseudo(bundles, sigs, vocab.person_label, RunConfig(),
                       threshold=0.5, capacity=8)
    (tmp_path / "r1").mkdir()
    (tmp_path / "r2").mkdir()
    save_registry(reg, tmp_path / "r1" / "reg.json")
    back = load_registry(tmp_path / "r1" / "reg.json")
    save_registry(back, tmp_path / "r2" / "reg.json")
    assert (tmp_path / "r1" / "reg.dytf").read_bytes() == (tmp_path / "r2" / "reg.dytf").read_bytes()
    assert (tmp_path / "r1" / "reg.json").read_text() == (tmp_path / "r2" / "reg.json").read_text()
    ok("tensor/registry IO round trips and corruption errors")
