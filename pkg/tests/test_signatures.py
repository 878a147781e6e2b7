import numpy as np
import pytest

from hoiscore.core import InteractionCategory
from hoiscore.errors import (
    BadCount,
    DimensionMismatch,
    MissingCategory,
    PlaceholderMissing,
    ZeroNorm,
)
from hoiscore.signatures import (
    PromptTemplate,
    SignatureSet,
    assemble_signature,
    fill_templates,
    load_signature_set,
    save_signature_set,
)

RIDE = InteractionCategory(id=0, verb="ride", object="horse")


def test_fill_templates_examples():
    out = fill_templates([PromptTemplate("a person {verb} a {object}")], RIDE)
    assert out == ["a person ride a horse"]
    feed = InteractionCategory(id=1, verb="feed", object="sheep")
    assert fill_templates(["{object} being {verb}"], feed) == ["sheep being feed"]
    with pytest.raises(PlaceholderMissing):
        fill_templates(["no placeholders about the {object}"], RIDE)
    with pytest.raises(BadCount):
        fill_templates(["{verb} {object}"], RIDE, expected_count=2)


def test_fill_templates_count_and_injectivity():
    templates = [PromptTemplate(f"t{i} {{verb}} {{object}}") for i in range(5)]
    a = fill_templates(templates, RIDE)
    b = fill_templates(templates, InteractionCategory(id=1, verb="wash", object="horse"))
    assert len(a) == len(templates)
    assert a != b


def test_assemble_signature_examples():
    cat = RIDE
    sig = assemble_signature(cat, [[0.0, 1.0]], ["d"], 1)
    np.testing.assert_allclose(sig.rows, [[0, 1]])
    np.testing.assert_allclose(sig.coarse, [0, 1])

    sig = assemble_signature(cat, [[1, 0, 0], [0, 1, 0]], ["a", "b"], 2)
    np.testing.assert_allclose(sig.coarse, [0.5, 0.5, 0.0])
    assert np.linalg.norm(sig.coarse) <= 1 + 1e-6

    with pytest.raises(BadCount):
        assemble_signature(cat, np.ones((49, 4)), ["x"] * 49, 50)
    with pytest.raises(ZeroNorm):
        assemble_signature(cat, [[0, 0], [1, 0]], ["a", "b"], 2)


def test_coarse_matches_recomputed_mean():
    rng = np.random.default_rng(3)
    rows = rng.standard_normal((7, 5))
    sig = assemble_signature(RIDE, rows, [f"d{i}" for i in range(7)], 7)
    expect = sig.rows.astype(np.float64).mean(axis=0)
    np.testing.assert_allclose(sig.coarse, expect, atol=1e-6)


def _random_set(rng, n_cats=4, m=3, d=8):
    sigs = []
    for i in range(n_cats):
        cat = InteractionCategory(id=i, verb=f"v{i}", object=f"o{i}")
        rows = rng.standard_normal((m, d))
        sigs.append(assemble_signature(cat, rows, [f"c{i}-{j}" for j in range(m)], m))
    return SignatureSet(sigs)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    sigs = _random_set(rng)
    path = tmp_path / "signatures.json"
    save_signature_set(sigs, path)
    back = load_signature_set(path)
    assert len(back) == len(sigs)
    for a, b in zip(sigs.signatures, back.signatures):
        assert a.rows.tobytes() == b.rows.tobytes()
        assert a.descriptions == b.descriptions
        np.testing.assert_allclose(a.coarse, b.coarse, atol=1e-7)
    # second save is byte-identical (determinism)
    path2 = tmp_path / "again.json"
    save_signature_set(back, path2)
    a = (tmp_path / "signatures.dytf").read_bytes()
    b = (tmp_path / "again.dytf").read_bytes()
    assert a == b


def test_load_missing_category(tmp_path):
    import json

    rng = np.random.default_rng(1)
    sigs = _random_set(rng)
    path = tmp_path / "signatures.json"
    save_signature_set(sigs, path)
    doc = json.loads(path.read_text())
    doc["categories"] = [c for c in doc["categories"] if c["id"] != 2]
    path.write_text(json.dumps(doc))
    with pytest.raises(MissingCategory):
        load_signature_set(path)


def test_load_dimension_mismatch(tmp_path):
    import json

    rng = np.random.default_rng(2)
    sigs = _random_set(rng, d=8)
    path = tmp_path / "signatures.json"
    save_signature_set(sigs, path)
    doc = json.loads(path.read_text())
    doc["dim"] = 16
    path.write_text(json.dumps(doc))
    with pytest.raises(DimensionMismatch):
        load_signature_set(path)
