import json

import pytest
from hypothesis import given, settings, strategies as st

from groundkit.corpus import (
    Corpus,
    CorpusError,
    Screenshot,
    UiCategory,
    UiElement,
    load_corpus,
    save_corpus,
    validate_corpus,
)
from groundkit.geometry import BoundingBox


def _shot(sid="s0", w=1000, h=1000):
    return Screenshot(sid, "GIMP", "Graphics and Design", w, h, f"images/{sid}.png")


def _two_by_five():
    shots = [_shot("s0"), _shot("s1")]
    elems = [
        UiElement(f"e{i}", "s0" if i < 3 else "s1", BoundingBox(i, i, i + 10, i + 5), f"item {i}")
        for i in range(5)
    ]
    return Corpus.build(shots, elems, name="two")


def test_round_trip_counts(tmp_path):
    save_corpus(_two_by_five(), tmp_path)
    c = load_corpus(tmp_path)
    assert len(c.screenshots) == 2
    assert len(c.elements) == 5
    assert load_corpus(tmp_path / "manifest.json").elements == c.elements


def test_unknown_screenshot_is_named(tmp_path):
    save_corpus(_two_by_five(), tmp_path)
    with open(tmp_path / "elements.jsonl", "a") as fh:
        fh.write(json.dumps({"id": "orphan", "screenshot_id": "nope", "bbox": [0, 0, 1, 1], "label": ""}) + "\n")
    with pytest.raises(CorpusError, match="orphan|nope"):
        load_corpus(tmp_path)


def test_empty_elements_file(tmp_path):
    save_corpus(Corpus.build([_shot()], []), tmp_path)
    c = load_corpus(tmp_path)
    assert len(c.elements) == 0
    assert validate_corpus(c).warnings == 0


def test_missing_manifest(tmp_path):
    with pytest.raises(CorpusError, match="missing manifest"):
        load_corpus(tmp_path)


def test_malformed_line_reports_line_number(tmp_path):
    save_corpus(_two_by_five(), tmp_path)
    lines = (tmp_path / "elements.jsonl").read_text().splitlines()
    lines[2] = "{not json"
    (tmp_path / "elements.jsonl").write_text("\n".join(lines) + "\n")
    with pytest.raises(CorpusError, match=r"elements\.jsonl:3"):
        load_corpus(tmp_path)


def test_duplicate_ids_rejected():
    with pytest.raises(CorpusError):
        Corpus.build([_shot(), _shot()], [])


def test_clamp_out_of_bounds_box():
    c = Corpus.build([_shot(w=100, h=100)], [UiElement("e", "s0", BoundingBox(-3, 0, 10, 10), "x")])
    rep = validate_corpus(c)
    assert rep.count("bbox_out_of_bounds") == 1
    assert rep.errors == 0
    assert rep.corpus.elements["e"].bbox.to_list() == [0, 0, 10, 10]
    # the 100x100 image also sits below the accepted resolution range
    assert rep.count("resolution_out_of_range") == 1


def test_clamp_single_warning_on_in_range_image():
    c = Corpus.build([_shot()], [UiElement("e", "s0", BoundingBox(-3, 0, 10, 10), "x")])
    rep = validate_corpus(c)
    assert (rep.warnings, rep.errors) == (1, 0)


def test_degenerate_box_strict():
    c = Corpus.build([_shot()], [UiElement("e", "s0", BoundingBox(10, 10, 10, 40), "x")])
    rep = validate_corpus(c, strict=True)
    assert rep.errors == 1
    assert "degenerate box" in rep.diagnostics[0].message
    assert validate_corpus(c).warnings == 1


def test_strict_out_of_bounds_is_error():
    c = Corpus.build([_shot()], [UiElement("e", "s0", BoundingBox(990, 0, 1010, 10), "x")])
    assert validate_corpus(c, strict=True).errors == 1


def test_clean_fixture(small_corpus):
    rep = validate_corpus(small_corpus, strict=True)
    assert (rep.errors, rep.warnings) == (0, 0)


def test_index_mismatch_detected():
    c = _two_by_five()
    c.index["s1"].append("e0")
    assert validate_corpus(c).count("index_mismatch") >= 1


def test_index_matches_scan(small_corpus):
    for sid in small_corpus.screenshots:
        direct = [e.id for e in small_corpus.elements.values() if e.screenshot_id == sid]
        assert small_corpus.index[sid] == direct


def test_ui_category_has_eight_values():
    assert len(UiCategory) == 8


def test_resolution_warning():
    c = Corpus.build([_shot(w=5000, h=5000)], [])
    assert validate_corpus(c).count("resolution_out_of_range") == 1


# -- properties -------------------------------------------------------------

finite = st.floats(-1e6, 1e6, allow_nan=False)
label = st.text(st.characters(blacklist_categories=("Cs",)), max_size=12)


@st.composite
def corpora(draw):
    n_shots = draw(st.integers(1, 3))
    shots = [_shot(f"s{i}", draw(st.integers(1, 4000)), draw(st.integers(1, 4000))) for i in range(n_shots)]
    elems = []
    for k in range(draw(st.integers(0, 8))):
        x1, y1 = draw(finite), draw(finite)
        x2, y2 = x1 + draw(st.floats(0, 1e4)), y1 + draw(st.floats(0, 1e4))
        cat = draw(st.none() | st.sampled_from(list(UiCategory)))
        ocr = draw(st.none() | label)
        elems.append(UiElement(f"e{k}", f"s{draw(st.integers(0, n_shots - 1))}",
                               BoundingBox(x1, y1, x2, y2), draw(label), ocr, cat))
    return Corpus.build(shots, elems)


@settings(max_examples=100, deadline=None)
@given(corpora())
def test_save_load_is_identity(tmp_path_factory, c):
    d = tmp_path_factory.mktemp("rt")
    save_corpus(c, d)
    back = load_corpus(d)
    assert back.screenshots == c.screenshots
    assert back.elements == c.elements
    assert back.index == c.index


@settings(max_examples=200, deadline=None)
@given(corpora())
def test_validation_idempotent(c):
    once = validate_corpus(c).corpus
    twice = validate_corpus(once)
    assert twice.count("bbox_out_of_bounds") == 0
    for e in once.elements.values():
        s = once.screenshots[e.screenshot_id]
        assert e.bbox.within(s.width, s.height)
