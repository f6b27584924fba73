"""Parse model outputs and score grounding predictions against a benchmark."""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .geometry import BoundingBox, Point, point_in_box

UNTAGGED = "untagged"

_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_PAIR_RE = re.compile(
    rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*\)|\[\s*({_NUM})\s*,\s*({_NUM})\s*\]"
)


class CoordSpace(str, Enum):
    PIXEL = "pixel"
    UNIT = "unit"
    MILLI = "milli"


class ParseError(ValueError):
    pass


def parse_prediction(
    raw: str,
    coord_space: Union[CoordSpace, str],
    image_w: float,
    image_h: float,
    pick: str = "last",
) -> Point:
    """Pull an ``(x, y)`` or ``[x, y]`` pair out of model text and map it to pixels.

    The coordinate space must be given by the caller; it is never guessed.
    ``pick`` selects the last pair (default) or the first.
    """
    space = CoordSpace(coord_space)
    if pick not in ("last", "first"):
        raise ValueError(f"pick must be 'last' or 'first', got {pick!r}")
    matches = list(_PAIR_RE.finditer(raw or ""))
    if not matches:
        raise ParseError(f"no coordinate pair in {raw!r}")
    m = matches[-1] if pick == "last" else matches[0]
    xs, ys = (m.group(1), m.group(2)) if m.group(1) is not None else (m.group(3), m.group(4))
    x, y = float(xs), float(ys)
    if space is CoordSpace.UNIT:
        x, y = x * image_w, y * image_h
    elif space is CoordSpace.MILLI:
        x, y = x * image_w / 1000.0, y * image_h / 1000.0
    try:
        return Point(x, y)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def format_point(p: Point) -> str:
    return f"({_fmt(p.u)}, {_fmt(p.v)})"


def _fmt(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


@dataclass(frozen=True)
class BenchmarkRecord:
    id: str
    instruction: str
    gt_box: BoundingBox
    image_w: Optional[int] = None
    image_h: Optional[int] = None
    image_path: Optional[str] = None
    tags: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for k in self.tags:
            if k != k.lower():
                raise ValueError(f"tag keys must be lowercase: {k!r}")
        if self.image_w is not None and self.image_h is not None:
            if not self.gt_box.within(self.image_w, self.image_h):
                raise ValueError(f"record {self.id}: gt_box outside image")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkRecord":
        return cls(
            id=str(d["id"]),
            instruction=d.get("instruction", ""),
            gt_box=BoundingBox.from_list(d["gt_box"]),
            image_w=d.get("image_w"),
            image_h=d.get("image_h"),
            image_path=d.get("image_path"),
            tags={str(k): str(v) for k, v in (d.get("tags") or {}).items()},
        )

    def to_dict(self) -> dict:
        out = {"id": self.id, "instruction": self.instruction, "gt_box": self.gt_box.to_list()}
        if self.image_w is not None:
            out["image_w"] = self.image_w
            out["image_h"] = self.image_h
        if self.image_path is not None:
            out["image_path"] = self.image_path
        out["tags"] = dict(self.tags)
        return out

    def image_size(self, root: Optional[Path] = None) -> tuple[int, int]:
        if self.image_w is not None and self.image_h is not None:
            return self.image_w, self.image_h
        if self.image_path is None:
            raise ValueError(f"record {self.id}: no image size or image_path")
        from PIL import Image

        path = Path(self.image_path)
        if root is not None and not path.is_absolute():
            path = root / path
        with Image.open(path) as im:
            return im.size


@dataclass(frozen=True)
class PredictionRecord:
    record_id: str
    point: Optional[Point] = None
    raw_text: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "PredictionRecord":
        rid = str(d["record_id"])
        if "point" in d and d["point"] is not None:
            u, v = d["point"]
            return cls(rid, point=Point(float(u), float(v)))
        if "text" in d:
            return cls(rid, raw_text=str(d["text"]))
        raise ValueError(f"prediction {rid} has neither 'point' nor 'text'")


@dataclass
class TagBucket:
    correct: int = 0
    total: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass
class EvalReport:
    correct: int = 0
    total: int = 0
    missing: int = 0
    unparseable: int = 0
    unmatched: list[str] = field(default_factory=list)
    by_tag: dict[str, dict[str, TagBucket]] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "correct": self.correct,
            "total": self.total,
            "missing": self.missing,
            "unparseable": self.unparseable,
            "unmatched": list(self.unmatched),
            "by_tag": {
                key: {
                    val: {"accuracy": b.accuracy, "correct": b.correct, "total": b.total}
                    for val, b in sorted(vals.items())
                }
                for key, vals in sorted(self.by_tag.items())
            },
        }


def score(
    benchmark: Sequence[BenchmarkRecord],
    predictions: Iterable[PredictionRecord],
    coord_space: Union[CoordSpace, str] = CoordSpace.PIXEL,
    strict_ids: bool = False,
    exclusive_bounds: bool = False,
    pick: str = "last",
    image_root: Optional[Path] = None,
) -> EvalReport:
    """Accuracy of predictions against benchmark boxes, overall and per tag value.

    Missing or unparseable predictions are scored incorrect. Predictions for
    unknown record ids are listed as unmatched; with ``strict_ids`` each one
    also counts as an incorrect entry in the overall denominator.
    """
    by_id: dict[str, BenchmarkRecord] = {}
    for rec in benchmark:
        if rec.id in by_id:
            raise ValueError(f"duplicate benchmark record id {rec.id!r}")
        by_id[rec.id] = rec

    preds: dict[str, PredictionRecord] = {}
    unmatched = []
    for pr in predictions:
        if pr.record_id not in by_id:
            unmatched.append(pr.record_id)
            continue
        if pr.record_id in preds:
            raise ValueError(f"duplicate prediction for record {pr.record_id!r}")
        preds[pr.record_id] = pr

    tag_keys = sorted({k for rec in by_id.values() for k in rec.tags})
    report = EvalReport(unmatched=sorted(unmatched))
    report.by_tag = {k: defaultdict(TagBucket) for k in tag_keys}

    for rid, rec in by_id.items():
        ok = False
        pr = preds.get(rid)
        if pr is None:
            report.missing += 1
        else:
            p = pr.point
            if p is None:
                w, h = (0, 0)
                if CoordSpace(coord_space) is not CoordSpace.PIXEL:
                    w, h = rec.image_size(image_root)
                try:
                    p = parse_prediction(pr.raw_text, coord_space, w, h, pick=pick)
                except ParseError:
                    report.unparseable += 1
            if p is not None:
                ok = point_in_box(p, rec.gt_box, inclusive=not exclusive_bounds)
        report.total += 1
        report.correct += ok
        for key in tag_keys:
            bucket = report.by_tag[key][rec.tags.get(key, UNTAGGED)]
            bucket.total += 1
            bucket.correct += ok

    if strict_ids:
        report.total += len(unmatched)
    report.by_tag = {k: dict(v) for k, v in report.by_tag.items()}
    return report


def pct(correct: int, total: int) -> float:
    """Percentage rounded half-up to one decimal, computed exactly."""
    if total == 0:
        return 0.0
    q = Fraction(100 * correct, total)
    d = Decimal(q.numerator) / Decimal(q.denominator)
    return float(d.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def report_table(r: EvalReport, layout: Sequence[str]) -> tuple[str, dict]:
    """Render accuracy per tag value as a text table plus a JSON mirror (percent, 1 dp)."""
    for key in layout:
        if key not in r.by_tag:
            raise KeyError(f"unknown layout key {key!r}; report has {sorted(r.by_tag)}")
    rows = []
    for key in layout:
        for val, b in sorted(r.by_tag[key].items()):
            rows.append((key, val, pct(b.correct, b.total), b.correct, b.total))
    if r.total:
        rows.append(("overall", "all", pct(r.correct, r.total), r.correct, r.total))

    header = ("tag", "value", "acc", "correct", "total")
    cells = [header] + [(k, v, f"{a:.1f}", str(c), str(t)) for k, v, a, c, t in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = ["  ".join(col.ljust(w) for col, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    mirror = {
        "columns": list(header),
        "rows": [
            {"tag": k, "value": v, "acc": a, "correct": c, "total": t}
            for k, v, a, c, t in rows
        ],
    }
    return "\n".join(lines) + "\n", mirror


def load_benchmark(path: Union[str, Path]) -> list[BenchmarkRecord]:
    return [BenchmarkRecord.from_dict(d) for d in _read_jsonl(path)]


def load_predictions(path: Union[str, Path]) -> list[PredictionRecord]:
    return [PredictionRecord.from_dict(d) for d in _read_jsonl(path)]


def _read_jsonl(path: Union[str, Path]) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
    return out
