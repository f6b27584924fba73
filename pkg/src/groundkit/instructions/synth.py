"""Template-based instruction synthesis: direct (textual/general) and spatial."""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from ..corpus import UiCategory, UiElement
from ..dedup import normalize_label
from .templates import general_templates, spatial_templates, textual_templates

_PLACEHOLDER_RE = re.compile(r"\{(text|element|element_1|element_2)\}")


class Kind(str, Enum):
    DIRECT = "direct"
    FUNCTIONAL = "functional"
    SPATIAL = "spatial"


class Subkind(str, Enum):
    TEXTUAL = "textual"
    VISUAL = "visual"
    GENERAL = "general"
    DESCRIPTION = "description"
    FUNCTIONAL_GOAL = "functional_goal"
    SPATIAL_RELATIVE = "spatial_relative"


class Provenance(str, Enum):
    TEMPLATE = "template"
    MODEL = "model"


class Relation(str, Enum):
    LEFT_OF = "left_of"
    RIGHT_OF = "right_of"
    ABOVE = "above"
    BELOW = "below"
    BETWEEN = "between"


@dataclass(frozen=True)
class InstructionSample:
    id: str
    screenshot_id: str
    element_id: str
    instruction: str
    kind: Kind
    subkind: Subkind
    provenance: Provenance
    anchors: tuple[str, ...] = ()
    template_id: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError(f"sample {self.id}: empty instruction")
        if _PLACEHOLDER_RE.search(self.instruction):
            raise ValueError(f"sample {self.id}: unresolved placeholder in {self.instruction!r}")
        if (self.kind is Kind.SPATIAL) != bool(self.anchors):
            raise ValueError(f"sample {self.id}: spatial samples need anchors, others none")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "screenshot_id": self.screenshot_id,
            "element_id": self.element_id,
            "instruction": self.instruction,
            "kind": self.kind.value,
            "subkind": self.subkind.value,
            "provenance": self.provenance.value,
            "anchors": list(self.anchors),
            "template_id": self.template_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstructionSample":
        return cls(
            id=d["id"],
            screenshot_id=d["screenshot_id"],
            element_id=d["element_id"],
            instruction=d["instruction"],
            kind=Kind(d["kind"]),
            subkind=Subkind(d["subkind"]),
            provenance=Provenance(d["provenance"]),
            anchors=tuple(d.get("anchors") or ()),
            template_id=d.get("template_id"),
        )


@dataclass
class SpatialConfig:
    max_gap_px: float = 200.0
    min_overlap: float = 0.5
    max_label_len: int = 40


@dataclass(frozen=True, order=True)
class SpatialRelation:
    relation: Relation
    anchors: tuple[str, ...] = field(default=())


def derive_rng(seed: int, *parts: str) -> random.Random:
    """Independent RNG stream per (seed, parts); stable across processes."""
    h = hashlib.sha256("\x1f".join([str(seed), *parts]).encode("utf-8")).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


def is_textual(e: UiElement) -> bool:
    if e.ui_category is UiCategory.INFORMATION_DISPLAY:
        return True
    return e.ocr_text is not None and normalize_label(e.ocr_text) == normalize_label(e.label) != ""


def _fill(template: str, **values: str) -> str:
    # single pass so a label containing "{text}" is not substituted twice
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)


def _pick(ids: Sequence[int], template_id: Optional[int], rng: Optional[random.Random], what: str) -> int:
    if template_id is not None:
        if template_id not in ids:
            raise KeyError(f"unknown {what} template id {template_id}")
        return template_id
    if rng is None:
        raise ValueError("need template_id or rng")
    return rng.choice(sorted(ids))


def make_textual_instruction(
    e: UiElement, template_id: Optional[int] = None, rng_seed: Optional[int] = None
) -> InstructionSample:
    if not is_textual(e):
        raise ValueError(f"element {e.id} is not textual (needs matching OCR or information_display)")
    if not e.label.strip():
        raise ValueError(f"element {e.id} has an empty label")
    templates = textual_templates()
    rng = derive_rng(rng_seed, e.id, "textual") if rng_seed is not None else None
    tid = _pick(list(templates), template_id, rng, "textual")
    return InstructionSample(
        id=f"{e.id}:direct:textual",
        screenshot_id=e.screenshot_id,
        element_id=e.id,
        instruction=_fill(templates[tid], text=e.label.strip()),
        kind=Kind.DIRECT,
        subkind=Subkind.TEXTUAL,
        provenance=Provenance.TEMPLATE,
        template_id=tid,
    )


def make_general_instruction(
    e: UiElement, template_id: Optional[int] = None, rng_seed: Optional[int] = None
) -> InstructionSample:
    if not e.label.strip():
        raise ValueError(f"element {e.id} has an empty label")
    templates = general_templates()
    rng = derive_rng(rng_seed, e.id, "general") if rng_seed is not None else None
    tid = _pick(list(templates), template_id, rng, "general")
    return InstructionSample(
        id=f"{e.id}:direct:general",
        screenshot_id=e.screenshot_id,
        element_id=e.id,
        instruction=_fill(templates[tid], text=e.label.strip()),
        kind=Kind.DIRECT,
        subkind=Subkind.GENERAL,
        provenance=Provenance.TEMPLATE,
        template_id=tid,
    )


def reliable_anchor_ids(elements: Sequence[UiElement], cfg: SpatialConfig) -> set[str]:
    """Anchors with a short, non-empty label that is unique on the screenshot."""
    counts: dict[str, int] = {}
    for e in elements:
        k = normalize_label(e.label)
        counts[k] = counts.get(k, 0) + 1
    return {
        e.id
        for e in elements
        if e.label.strip()
        and len(e.label.strip()) <= cfg.max_label_len
        and counts[normalize_label(e.label)] == 1
    }


def _nearest(mask: np.ndarray, gap: np.ndarray) -> np.ndarray:
    if not mask.any():
        return mask
    return mask & (gap == gap[mask].min())


def spatial_relations(
    target: UiElement, elements: Sequence[UiElement], cfg: Optional[SpatialConfig] = None
) -> list[SpatialRelation]:
    """Relations locating ``target`` from neighbouring anchors on the same screenshot.

    ``RIGHT_OF`` with anchor A means the target sits right of A: A ends left of
    the target's left edge, the two overlap vertically by at least
    ``min_overlap`` of the shorter height, and A is the nearest such element.
    The other directions mirror this. ``BETWEEN`` pairs the nearest left and
    right anchors when both horizontal gaps are within ``max_gap_px``.
    Nearest anchors failing the reliability filter yield no relation.
    """
    cfg = cfg or SpatialConfig()
    for e in elements:
        if e.screenshot_id != target.screenshot_id:
            raise ValueError(f"element {e.id} is on a different screenshot than {target.id}")
    others = [e for e in elements if e.id != target.id]
    if not others:
        return []
    reliable = reliable_anchor_ids(elements, cfg)
    ids = np.array([e.id for e in others], dtype=object)
    box = np.array([e.bbox.to_list() for e in others], dtype=np.float64)
    ax1, ay1, ax2, ay2 = box.T
    t = target.bbox
    th, tw = t.y2 - t.y1, t.x2 - t.x1
    v_ok = (np.minimum(ay2, t.y2) - np.maximum(ay1, t.y1)) >= cfg.min_overlap * np.minimum(ay2 - ay1, th)
    h_ok = (np.minimum(ax2, t.x2) - np.maximum(ax1, t.x1)) >= cfg.min_overlap * np.minimum(ax2 - ax1, tw)
    ok = np.array([i in reliable for i in ids], dtype=bool)

    gaps = {
        Relation.RIGHT_OF: t.x1 - ax2,
        Relation.LEFT_OF: ax1 - t.x2,
        Relation.BELOW: t.y1 - ay2,
        Relation.ABOVE: ay1 - t.y2,
    }
    overlap = {Relation.RIGHT_OF: v_ok, Relation.LEFT_OF: v_ok, Relation.BELOW: h_ok, Relation.ABOVE: h_ok}
    nearest = {rel: _nearest((g >= 0) & overlap[rel], g) & ok for rel, g in gaps.items()}

    out = []
    for rel in (Relation.RIGHT_OF, Relation.LEFT_OF, Relation.ABOVE, Relation.BELOW):
        out.extend(SpatialRelation(rel, (a,)) for a in sorted(ids[nearest[rel]]))
    left = nearest[Relation.RIGHT_OF] & (gaps[Relation.RIGHT_OF] <= cfg.max_gap_px)
    right = nearest[Relation.LEFT_OF] & (gaps[Relation.LEFT_OF] <= cfg.max_gap_px)
    for a in sorted(ids[left]):
        for b in sorted(ids[right]):
            out.append(SpatialRelation(Relation.BETWEEN, (a, b)))
    return out


def make_spatial_instruction(
    target: UiElement,
    relation: Relation,
    anchors: Sequence[UiElement],
    template_id: Optional[int] = None,
    rng: Optional[random.Random] = None,
) -> InstructionSample:
    relation = Relation(relation)
    need = 2 if relation is Relation.BETWEEN else 1
    if len(anchors) != need:
        raise ValueError(f"{relation.value} needs {need} anchor(s), got {len(anchors)}")
    templates = {tid: text for tid, (rel, text) in spatial_templates().items() if rel == relation.value}
    if template_id is not None and template_id in spatial_templates() and template_id not in templates:
        raise ValueError(f"template {template_id} is not a {relation.value} template")
    tid = _pick(list(templates), template_id, rng, "spatial")
    labels = [a.label.strip() for a in anchors]
    if relation is Relation.BETWEEN:
        text = _fill(templates[tid], element_1=labels[0], element_2=labels[1])
    else:
        text = _fill(templates[tid], element=labels[0])
    return InstructionSample(
        id=f"{target.id}:spatial:{relation.value}:{'+'.join(a.id for a in anchors)}",
        screenshot_id=target.screenshot_id,
        element_id=target.id,
        instruction=text,
        kind=Kind.SPATIAL,
        subkind=Subkind.SPATIAL_RELATIVE,
        provenance=Provenance.TEMPLATE,
        anchors=tuple(a.id for a in anchors),
        template_id=tid,
    )
