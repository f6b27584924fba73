"""Data model, on-disk schema, loading and validation for annotated screenshot corpora.

A corpus directory holds ``manifest.json`` plus two JSONL files::

    manifest.json      {"name": ..., "screenshots_file": ..., "elements_file": ..., "version": 1}
    screenshots.jsonl  one Screenshot per line
    elements.jsonl     one UiElement per line, bbox as [x1, y1, x2, y2]
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Union

from .geometry import BoundingBox

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
SCHEMA_VERSION = 1
MIN_MEGAPIXELS = 0.1
MAX_MEGAPIXELS = 16.0


class CorpusError(ValueError):
    """Fatal problem reading a corpus from disk."""


class UiCategory(str, Enum):
    INPUT_ELEMENT = "input_element"
    SIDEBAR = "sidebar"
    INFORMATION_DISPLAY = "information_display"
    BUTTON = "button"
    NAVIGATION = "navigation"
    VISUAL_ELEMENTS = "visual_elements"
    MENU = "menu"
    OTHERS = "others"


@dataclass(frozen=True)
class Screenshot:
    id: str
    app_name: str
    category: str
    width: int
    height: int
    image_path: str

    def __post_init__(self) -> None:
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError(f"screenshot {self.id}: size must be >= 1x1")

    @property
    def megapixels(self) -> float:
        return self.width * self.height / 1e6

    @classmethod
    def from_dict(cls, d: dict) -> "Screenshot":
        return cls(
            id=str(d["id"]),
            app_name=str(d.get("app_name", "")),
            category=str(d.get("category", "")),
            width=int(d["width"]),
            height=int(d["height"]),
            image_path=str(d.get("image_path", "")),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "app_name": self.app_name,
            "category": self.category,
            "width": self.width,
            "height": self.height,
            "image_path": self.image_path,
        }


@dataclass(frozen=True)
class UiElement:
    id: str
    screenshot_id: str
    bbox: BoundingBox
    label: str
    ocr_text: Optional[str] = None
    ui_category: Optional[UiCategory] = None

    @classmethod
    def from_dict(cls, d: dict) -> "UiElement":
        cat = d.get("ui_category")
        return cls(
            id=str(d["id"]),
            screenshot_id=str(d["screenshot_id"]),
            bbox=BoundingBox.from_list(d["bbox"]),
            label=str(d.get("label", "")),
            ocr_text=d.get("ocr_text"),
            ui_category=UiCategory(cat) if cat is not None else None,
        )

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "screenshot_id": self.screenshot_id,
            "bbox": self.bbox.to_list(),
            "label": self.label,
        }
        if self.ocr_text is not None:
            out["ocr_text"] = self.ocr_text
        if self.ui_category is not None:
            out["ui_category"] = self.ui_category.value
        return out


@dataclass
class Corpus:
    screenshots: dict[str, Screenshot]
    elements: dict[str, UiElement]
    index: dict[str, list[str]]
    name: str = "corpus"
    root: Optional[Path] = None

    @classmethod
    def build(
        cls,
        screenshots: Iterable[Screenshot],
        elements: Iterable[UiElement],
        name: str = "corpus",
        root: Optional[Path] = None,
    ) -> "Corpus":
        shots: dict[str, Screenshot] = {}
        for s in screenshots:
            if s.id in shots:
                raise CorpusError(f"duplicate screenshot id {s.id!r}")
            shots[s.id] = s
        elems: dict[str, UiElement] = {}
        index: dict[str, list[str]] = {sid: [] for sid in shots}
        for e in elements:
            if e.id in elems:
                raise CorpusError(f"duplicate element id {e.id!r}")
            if e.screenshot_id not in shots:
                raise CorpusError(
                    f"element {e.id!r} references unknown screenshot id {e.screenshot_id!r}"
                )
            elems[e.id] = e
            index[e.screenshot_id].append(e.id)
        return cls(shots, elems, index, name=name, root=root)

    def elements_of(self, screenshot_id: str) -> list[UiElement]:
        return [self.elements[eid] for eid in self.index[screenshot_id]]

    def screenshot_of(self, element_id: str) -> Screenshot:
        return self.screenshots[self.elements[element_id].screenshot_id]

    def image_file(self, screenshot_id: str) -> Path:
        path = Path(self.screenshots[screenshot_id].image_path)
        if self.root is not None and not path.is_absolute():
            path = self.root / path
        return path


def _read_jsonl(path: Path, kind: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON in {kind} ({exc.msg})") from None
    return rows


def load_corpus(path: Union[str, Path]) -> Corpus:
    """Load a corpus from a directory holding ``manifest.json`` or from the manifest itself."""
    path = Path(path)
    manifest_path = path / MANIFEST_NAME if path.is_dir() else path
    if not manifest_path.is_file():
        raise CorpusError(f"missing manifest: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{manifest_path}: malformed manifest ({exc.msg})") from None
    if manifest.get("version") != SCHEMA_VERSION:
        raise CorpusError(f"{manifest_path}: unsupported version {manifest.get('version')!r}")
    root = manifest_path.parent

    def _rows(key: str, kind: str, parse):
        out = []
        fpath = root / manifest[key]
        for i, d in enumerate(_read_jsonl(fpath, kind), 1):
            try:
                out.append(parse(d))
            except (KeyError, ValueError, TypeError) as exc:
                rid = d.get("id", f"#{i}") if isinstance(d, dict) else f"#{i}"
                raise CorpusError(f"{fpath}: bad {kind} record {rid}: {exc}") from None
        return out

    shots = _rows("screenshots_file", "screenshot", Screenshot.from_dict)
    elems = _rows("elements_file", "element", UiElement.from_dict)
    return Corpus.build(shots, elems, name=manifest.get("name", root.name), root=root)


def save_corpus(c: Corpus, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "name": c.name,
        "screenshots_file": "screenshots.jsonl",
        "elements_file": "elements.jsonl",
        "version": SCHEMA_VERSION,
    }
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    with open(out_dir / "screenshots.jsonl", "w", encoding="utf-8") as fh:
        for s in c.screenshots.values():
            fh.write(json.dumps(s.to_dict(), ensure_ascii=False) + "\n")
    with open(out_dir / "elements.jsonl", "w", encoding="utf-8") as fh:
        for e in c.elements.values():
            fh.write(json.dumps(e.to_dict(), ensure_ascii=False) + "\n")
    return out_dir


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    record_id: str
    message: str


@dataclass
class ValidationReport:
    diagnostics: list[Diagnostic] = field(default_factory=list)
    corpus: Optional[Corpus] = None

    @property
    def errors(self) -> int:
        return sum(d.severity == "error" for d in self.diagnostics)

    @property
    def warnings(self) -> int:
        return sum(d.severity == "warning" for d in self.diagnostics)

    def count(self, code: str) -> int:
        return sum(d.code == code for d in self.diagnostics)

    def to_dict(self) -> dict:
        return {
            "errors": self.errors,
            "warnings": self.warnings,
            "by_code": dict(sorted(Counter(d.code for d in self.diagnostics).items())),
            "diagnostics": [d.__dict__ for d in self.diagnostics],
        }


def validate_corpus(c: Corpus, strict: bool = False) -> ValidationReport:
    """Check every invariant and return a report plus a repaired corpus.

    Non-strict: out-of-image boxes are clamped and degenerate boxes kept, both
    as warnings. Strict: both become errors and the boxes are left untouched.
    """
    report = ValidationReport()
    add = report.diagnostics.append
    bad_sev = "error" if strict else "warning"

    for s in c.screenshots.values():
        if not MIN_MEGAPIXELS <= s.megapixels <= MAX_MEGAPIXELS:
            add(Diagnostic("warning", "resolution_out_of_range", s.id,
                           f"{s.width}x{s.height} = {s.megapixels:.3f} MP"))

    fixed: dict[str, UiElement] = {}
    for sid, eids in c.index.items():
        for eid in eids:
            if c.elements[eid].screenshot_id != sid:
                add(Diagnostic("error", "index_mismatch", eid, f"indexed under {sid}"))
    for eid, e in c.elements.items():
        shot = c.screenshots[e.screenshot_id]
        b = e.bbox
        if not b.within(shot.width, shot.height):
            add(Diagnostic(bad_sev, "bbox_out_of_bounds", eid,
                           f"bbox {b.to_list()} outside {shot.width}x{shot.height}"))
            if not strict:
                b = _clamp(b, shot.width, shot.height)
                e = replace(e, bbox=b)
        if b.width == 0 or b.height == 0:
            add(Diagnostic(bad_sev, "degenerate_box", eid, f"degenerate box {b.to_list()}"))
        fixed[eid] = e

    indexed = {eid for eids in c.index.values() for eid in eids}
    for eid in c.elements:
        if eid not in indexed:
            add(Diagnostic("error", "index_mismatch", eid, "element missing from index"))

    report.corpus = Corpus.build(c.screenshots.values(), fixed.values(), name=c.name, root=c.root)
    return report


def _clamp(b: BoundingBox, w: float, h: float) -> BoundingBox:
    def cl(x: float, hi: float) -> float:
        return min(max(x, 0.0), float(hi))

    return BoundingBox(cl(b.x1, w), cl(b.y1, h), cl(b.x2, w), cl(b.y2, h))
