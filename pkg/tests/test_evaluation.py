import json
import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from groundkit import synthetic
from groundkit.evaluation import (
    BenchmarkRecord,
    ParseError,
    PredictionRecord,
    format_point,
    load_benchmark,
    load_predictions,
    parse_prediction,
    pct,
    report_table,
    score,
)
from groundkit.geometry import BoundingBox, Point


@pytest.mark.parametrize(
    "raw,space,size,expected",
    [
        ("(512, 304)", "pixel", (1920, 1080), (512, 304)),
        ("click at (0.5, 0.3)", "unit", (1000, 1000), (500, 300)),
        ("first (1,2) then (30,40)", "pixel", (100, 100), (30, 40)),
        ("[250, 500]", "milli", (1920, 1080), (480, 540)),
        ("x=(-1.5e1, +2.)", "pixel", (10, 10), (-15, 2)),
    ],
)
def test_parse_examples(raw, space, size, expected):
    p = parse_prediction(raw, space, *size)
    assert (p.u, p.v) == pytest.approx(expected)


def test_parse_first_pair():
    assert parse_prediction("first (1,2) then (30,40)", "pixel", 100, 100, pick="first") == Point(1, 2)


@pytest.mark.parametrize("raw", ["no idea", "", "(1, )", "click 3 4"])
def test_parse_failure(raw):
    with pytest.raises(ParseError):
        parse_prediction(raw, "pixel", 100, 100)


def test_coord_space_required():
    with pytest.raises(ValueError):
        parse_prediction("(1, 2)", "auto", 100, 100)


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6), st.integers(0, 2), st.integers(0, 2))
def test_format_parse_round_trip(a, b, da, db):
    p = Point(a / 10**da, b / 10**db)
    assert parse_prediction(format_point(p), "pixel", 1, 1) == p


def _rec(i, box, **tags):
    return BenchmarkRecord(f"r{i}", "click", BoundingBox(*box), 100, 100, tags=tags)


def test_half_correct():
    bench = [_rec(i, (0, 0, 10, 10)) for i in range(4)]
    preds = [PredictionRecord("r0", Point(5, 5)), PredictionRecord("r1", Point(10, 10)),
             PredictionRecord("r2", Point(50, 5)), PredictionRecord("r3", raw_text="nothing")]
    r = score(bench, preds)
    assert r.accuracy == 0.5
    assert r.unparseable == 1


def test_all_missing():
    r = score([_rec(i, (0, 0, 10, 10)) for i in range(4)], [])
    assert (r.accuracy, r.unparseable, r.missing) == (0.0, 0, 4)


def _six():
    bench = [_rec(i, (0, 0, 10, 10), platform="desktop" if i < 4 else "mobile") for i in range(6)]
    hits = {0, 1, 2, 4}
    preds = [PredictionRecord(f"r{i}", Point(5, 5) if i in hits else Point(50, 50)) for i in range(6)]
    return bench, preds


def test_per_tag_breakdown():
    r = score(*_six())
    acc = {k: b.accuracy for k, b in r.by_tag["platform"].items()}
    assert acc == {"desktop": 0.75, "mobile": 0.5}
    assert (r.correct, r.total) == (4, 6)


def test_report_table_layout():
    text, mirror = report_table(score(*_six()), ["platform"])
    rows = {(row["tag"], row["value"]): row["acc"] for row in mirror["rows"]}
    assert rows[("platform", "desktop")] == 75.0
    assert rows[("platform", "mobile")] == 50.0
    assert rows[("overall", "all")] == 66.7
    assert "75.0" in text and "50.0" in text


def test_report_table_empty_and_unknown_key():
    text, mirror = report_table(score([], []), [])
    assert len(text.strip().splitlines()) == 2  # header and rule
    assert mirror["rows"] == []
    with pytest.raises(KeyError):
        report_table(score(*_six()), ["modality"])


@pytest.mark.parametrize("c,t,expected", [(2, 3, 66.7), (1, 3, 33.3), (1, 8, 12.5), (1, 16, 6.3), (0, 0, 0.0)])
def test_pct_rounding(c, t, expected):
    assert pct(c, t) == expected


def test_unmatched_and_strict_ids():
    bench = [_rec(0, (0, 0, 10, 10))]
    preds = [PredictionRecord("r0", Point(1, 1)), PredictionRecord("ghost", Point(1, 1))]
    loose = score(bench, preds)
    assert loose.unmatched == ["ghost"] and loose.total == 1
    strict = score(bench, preds, strict_ids=True)
    assert strict.total == 2 and strict.accuracy == 0.5


def test_exclusive_bounds_flag():
    bench = [_rec(0, (0, 0, 10, 10))]
    preds = [PredictionRecord("r0", Point(10, 5))]
    assert score(bench, preds).correct == 1
    assert score(bench, preds, exclusive_bounds=True).correct == 0


def test_duplicates_rejected():
    with pytest.raises(ValueError):
        score([_rec(0, (0, 0, 1, 1)), _rec(0, (0, 0, 1, 1))], [])
    with pytest.raises(ValueError):
        score([_rec(0, (0, 0, 1, 1))], [PredictionRecord("r0", Point(0, 0))] * 2)


def test_record_validation():
    with pytest.raises(ValueError):
        BenchmarkRecord("x", "", BoundingBox(0, 0, 200, 10), 100, 100)
    with pytest.raises(ValueError):
        BenchmarkRecord("x", "", BoundingBox(0, 0, 1, 1), 100, 100, tags={"Platform": "web"})


def test_unit_space_uses_image_size():
    bench = [BenchmarkRecord("r0", "", BoundingBox(400, 400, 600, 600), 1000, 1000)]
    assert score(bench, [PredictionRecord("r0", raw_text="(0.5, 0.5)")], "unit").correct == 1


def test_files_round_trip(tmp_path):
    rows = synthetic.benchmark_records(20, seed=1)
    path = tmp_path / "b.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    back = load_benchmark(path)
    assert [b.to_dict() for b in back] == rows
    (tmp_path / "p.jsonl").write_text('{"record_id": "b00000", "point": [1, 2]}\n{"record_id": "b00001", "text": "(3, 4)"}\n')
    preds = load_predictions(tmp_path / "p.jsonl")
    assert preds[0].point == Point(1, 2) and preds[1].raw_text == "(3, 4)"


def _random_case(seed, n=200):
    rng = random.Random(seed)
    rows = synthetic.benchmark_records(n, seed=seed)
    raw = {}
    for r in rows:
        x1, y1, x2, y2 = r["gt_box"]
        roll = rng.random()
        if roll < 0.2:
            continue
        if roll < 0.5:
            raw[r["id"]] = (rng.uniform(x1, x2), rng.uniform(y1, y2))
        elif roll < 0.6:
            raw[r["id"]] = (x2, rng.choice([y1, y2]))
        else:
            raw[r["id"]] = (rng.uniform(0, 1920), rng.uniform(0, 1080))
    return rows, raw


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.randoms())
def test_matches_counting_loop_and_order_free(seed, rnd):
    rows, raw = _random_case(seed)
    bench = [BenchmarkRecord.from_dict(r) for r in rows]
    preds = [PredictionRecord(rid, Point(*pt)) for rid, pt in raw.items()]
    r = score(bench, preds)
    ref = oracles.count_eval(rows, raw)
    assert (r.correct, r.total, r.missing) == (ref["correct"], ref["total"], ref["missing"])
    got = {k: {v: (b.correct, b.total) for v, b in d.items()} for k, d in r.by_tag.items()}
    assert got == ref["by_tag"]
    for key, buckets in r.by_tag.items():
        assert sum(b.correct for b in buckets.values()) == r.correct
        assert sum(b.total for b in buckets.values()) == r.total
    rnd.shuffle(bench)
    rnd.shuffle(preds)
    assert score(bench, preds).to_dict() == r.to_dict()
