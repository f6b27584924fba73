"""Corpus-level statistics: counts, resolution, element area, category breakdowns.

Accumulators merge associatively and sums are exact (Shewchuk partials), so
sharded runs and any record order give bit-identical results.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .corpus import Corpus, Screenshot, UiElement

RES_BIN_MP = 0.25
AREA_BINS_PER_DECADE = 10
AREA_MIN_EXP = -5  # percent
AREA_MAX_EXP = 2
COUNT_BIN = 10
UNCATEGORIZED = "uncategorized"


class ExactSum:
    """Exactly rounded running sum; result is independent of add/merge order."""

    def __init__(self) -> None:
        self.partials: list[float] = []

    def add(self, x: float) -> None:
        partials = self.partials
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]

    def merge(self, other: "ExactSum") -> None:
        for p in other.partials:
            self.add(p)

    @property
    def value(self) -> float:
        return math.fsum(self.partials)


def area_bin(pct: float) -> int:
    """Log-scale bin index; values below 1e-5 % (incl. zero) land in bin 0."""
    lo, hi = 0, (AREA_MAX_EXP - AREA_MIN_EXP) * AREA_BINS_PER_DECADE - 1
    if pct <= 0:
        return lo
    idx = math.floor((math.log10(pct) - AREA_MIN_EXP) * AREA_BINS_PER_DECADE + 1e-9)
    return min(max(idx, lo), hi)


def area_edge(i: int) -> float:
    return 10.0 ** (AREA_MIN_EXP + i / AREA_BINS_PER_DECADE)


@dataclass
class StatsAccumulator:
    num_screenshots: int = 0
    num_elements: int = 0
    max_elements: int = 0
    mp_sum: ExactSum = field(default_factory=ExactSum)
    mp_min: float = math.inf
    mp_max: float = -math.inf
    area_sum: ExactSum = field(default_factory=ExactSum)
    ui_categories: Counter = field(default_factory=Counter)
    app_screens: Counter = field(default_factory=Counter)
    app_elements: Counter = field(default_factory=Counter)
    res_hist: Counter = field(default_factory=Counter)
    area_hist: Counter = field(default_factory=Counter)
    count_hist: Counter = field(default_factory=Counter)

    def add_screenshot(self, s: Screenshot, elements: list[UiElement]) -> None:
        n = len(elements)
        mp = s.megapixels
        self.num_screenshots += 1
        self.num_elements += n
        self.max_elements = max(self.max_elements, n)
        self.mp_sum.add(mp)
        self.mp_min = min(self.mp_min, mp)
        self.mp_max = max(self.mp_max, mp)
        self.res_hist[math.floor(mp / RES_BIN_MP)] += 1
        self.count_hist[n // COUNT_BIN] += 1
        self.app_screens[s.category or UNCATEGORIZED] += 1
        self.app_elements[s.category or UNCATEGORIZED] += n
        image_area = s.width * s.height
        for e in elements:
            pct = 100.0 * e.bbox.area / image_area
            self.area_sum.add(pct)
            self.area_hist[area_bin(pct)] += 1
            cat = e.ui_category.value if e.ui_category is not None else UNCATEGORIZED
            self.ui_categories[cat] += 1

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        self.num_screenshots += other.num_screenshots
        self.num_elements += other.num_elements
        self.max_elements = max(self.max_elements, other.max_elements)
        self.mp_sum.merge(other.mp_sum)
        self.mp_min = min(self.mp_min, other.mp_min)
        self.mp_max = max(self.mp_max, other.mp_max)
        self.area_sum.merge(other.area_sum)
        for mine, theirs in (
            (self.ui_categories, other.ui_categories),
            (self.app_screens, other.app_screens),
            (self.app_elements, other.app_elements),
            (self.res_hist, other.res_hist),
            (self.area_hist, other.area_hist),
            (self.count_hist, other.count_hist),
        ):
            mine.update(theirs)
        return self


@dataclass
class Histogram:
    bin_edges: list[float]
    counts: list[int]

    def to_dict(self) -> dict:
        return {"bin_edges": self.bin_edges, "counts": self.counts}


def _dense(hist: Counter, edge) -> Histogram:
    """Contiguous bins spanning the occupied range (one empty bin if none)."""
    if not hist:
        return Histogram([edge(0), edge(1)], [0])
    lo, hi = min(hist), max(hist)
    return Histogram([edge(i) for i in range(lo, hi + 2)], [hist.get(i, 0) for i in range(lo, hi + 1)])


@dataclass
class CorpusStats:
    num_screenshots: int
    num_elements: int
    avg_elements_per_screenshot: float
    max_elements_per_screenshot: int
    megapixels: dict[str, float]
    mean_element_area_pct: float
    ui_category_counts: dict[str, int]
    app_category_screenshots: dict[str, int]
    app_category_elements: dict[str, int]
    histograms: dict[str, Histogram]

    def to_dict(self) -> dict:
        return {
            "num_screenshots": self.num_screenshots,
            "num_elements": self.num_elements,
            "avg_elements_per_screenshot": self.avg_elements_per_screenshot,
            "max_elements_per_screenshot": self.max_elements_per_screenshot,
            "megapixels": dict(self.megapixels),
            "mean_element_area_pct": self.mean_element_area_pct,
            "ui_category_counts": dict(self.ui_category_counts),
            "app_category_screenshots": dict(self.app_category_screenshots),
            "app_category_elements": dict(self.app_category_elements),
            "histograms": {k: h.to_dict() for k, h in self.histograms.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusStats":
        return cls(
            num_screenshots=d["num_screenshots"],
            num_elements=d["num_elements"],
            avg_elements_per_screenshot=d["avg_elements_per_screenshot"],
            max_elements_per_screenshot=d["max_elements_per_screenshot"],
            megapixels=dict(d["megapixels"]),
            mean_element_area_pct=d["mean_element_area_pct"],
            ui_category_counts=dict(d["ui_category_counts"]),
            app_category_screenshots=dict(d["app_category_screenshots"]),
            app_category_elements=dict(d["app_category_elements"]),
            histograms={k: Histogram(**h) for k, h in d["histograms"].items()},
        )


def finalize(acc: StatsAccumulator) -> CorpusStats:
    if acc.num_screenshots == 0:
        raise ValueError("cannot compute statistics of an empty corpus")
    return CorpusStats(
        num_screenshots=acc.num_screenshots,
        num_elements=acc.num_elements,
        avg_elements_per_screenshot=acc.num_elements / acc.num_screenshots,
        max_elements_per_screenshot=acc.max_elements,
        megapixels={
            "mean": acc.mp_sum.value / acc.num_screenshots,
            "min": acc.mp_min,
            "max": acc.mp_max,
        },
        mean_element_area_pct=acc.area_sum.value / acc.num_elements if acc.num_elements else 0.0,
        ui_category_counts=dict(sorted(acc.ui_categories.items())),
        app_category_screenshots=dict(sorted(acc.app_screens.items())),
        app_category_elements=dict(sorted(acc.app_elements.items())),
        histograms={
            "resolution_mp": _dense(acc.res_hist, lambda i: i * RES_BIN_MP),
            "element_area_pct": _dense(acc.area_hist, area_edge),
            "elements_per_screenshot": _dense(acc.count_hist, lambda i: i * COUNT_BIN),
        },
    )


def compute_stats(c: Corpus, shards: int = 1) -> CorpusStats:
    """All statistics in one pass; ``shards`` > 1 splits screenshots and merges."""
    sids = list(c.screenshots)
    if not sids:
        raise ValueError("cannot compute statistics of an empty corpus")
    shards = max(1, min(shards, len(sids)))
    parts = []
    for k in range(shards):
        acc = StatsAccumulator()
        for sid in sids[k::shards]:
            acc.add_screenshot(c.screenshots[sid], c.elements_of(sid))
        parts.append(acc)
    total = parts[0]
    for p in parts[1:]:
        total.merge(p)
    return finalize(total)


TABLE_COLUMNS = ("Dataset", "E", "S", "Res Range", "EleArea", "#AvgE")


def _human(n: int) -> str:
    if n >= 1_000_000:
        return f"{n / 1e6:.2f}M"
    if n >= 1_000:
        return f"{n / 1e3:.0f}k"
    return str(n)


def table_row(s: CorpusStats, name: str = "corpus") -> dict[str, str]:
    return {
        "Dataset": name,
        "E": _human(s.num_elements),
        "S": _human(s.num_screenshots),
        "Res Range": f"({s.megapixels['min']:.1f}, {s.megapixels['max']:.1f})",
        "EleArea": f"{s.mean_element_area_pct:.2f}%",
        "#AvgE": f"{s.avg_elements_per_screenshot:.1f}",
    }


def emit_report(
    s: CorpusStats, fmt: str = "json", out: Optional[Union[str, Path]] = None, name: str = "corpus"
) -> str:
    if fmt == "json":
        text = json.dumps(s.to_dict(), indent=2) + "\n"
    elif fmt == "table":
        row = table_row(s, name)
        widths = [max(len(c), len(row[c])) for c in TABLE_COLUMNS]
        lines = [
            " | ".join(c.ljust(w) for c, w in zip(TABLE_COLUMNS, widths)),
            "-+-".join("-" * w for w in widths),
            " | ".join(row[c].ljust(w) for c, w in zip(TABLE_COLUMNS, widths)),
        ]
        text = "\n".join(line.rstrip() for line in lines) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
    return text
