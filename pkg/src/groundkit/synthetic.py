"""Synthetic corpora with rendered screenshots, for tests, demos and benchmarks.

Each element is painted with a pattern keyed by a *visual id*, so elements
sharing a visual id have byte-identical crops. That gives dedup fixtures a
known ground-truth clustering.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .corpus import Corpus, Screenshot, UiCategory, UiElement, save_corpus
from .geometry import BoundingBox

APP_CATEGORIES = {
    "GIMP": "Graphics and Design",
    "Inkscape": "Graphics and Design",
    "LibreOffice Calc": "Productivity",
    "VSCode": "Development",
    "FreeCAD": "Scientific",
    "VLC Media Player": "Entertainment",
    "Zotero": "Education",
    "Audacity": "Video and Audio Production",
}
WORDS = [
    "File", "Edit", "View", "Save", "Open", "Export", "Undo", "Redo", "Copy", "Paste",
    "Zoom", "Layers", "Brush", "Opacity", "Settings", "Help", "Files", "Search", "Run",
    "Debug", "Insert", "Format", "Tools", "Window", "Play", "Stop", "Record", "Cut",
]


def pattern(visual_id: int, h: int, w: int) -> np.ndarray:
    """Deterministic RGB texture for a visual id: a coarse random grid upsampled."""
    rng = np.random.default_rng(1_000_003 * visual_id + 17)
    coarse = rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)
    ys = np.minimum(np.arange(h) * 4 // max(h, 1), 3)
    xs = np.minimum(np.arange(w) * 4 // max(w, 1), 3)
    return coarse[ys][:, xs]


@dataclass
class PlacedElement:
    element: UiElement
    visual_id: int


def render(width: int, height: int, placed: Sequence[PlacedElement], background: int = 240) -> np.ndarray:
    img = np.full((height, width, 3), background, dtype=np.uint8)
    for pe in placed:
        b = pe.element.bbox
        x0, y0, x1, y1 = int(b.x1), int(b.y1), int(b.x2), int(b.y2)
        if x1 > x0 and y1 > y0:
            img[y0:y1, x0:x1] = pattern(pe.visual_id, y1 - y0, x1 - x0)
    return img


def write_corpus(
    out_dir: Union[str, Path],
    shots: Sequence[tuple[Screenshot, Sequence[PlacedElement]]],
    name: str = "synthetic",
    images: bool = True,
) -> Corpus:
    from PIL import Image

    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    if images:
        for shot, placed in shots:
            Image.fromarray(render(shot.width, shot.height, placed)).save(out_dir / shot.image_path)
    corpus = Corpus.build(
        [s for s, _ in shots], [pe.element for _, placed in shots for pe in placed], name=name, root=out_dir
    )
    save_corpus(corpus, out_dir)
    return corpus


def random_layout(
    rng: random.Random,
    sid: str,
    width: int,
    height: int,
    n: int,
    next_visual: list[int],
) -> list[PlacedElement]:
    """Rows of non-overlapping widgets with mixed labels, OCR and categories."""
    placed = []
    y = 4
    k = 0
    while k < n and y < height - 12:
        row_h = rng.randint(8, 28)
        x = 4
        while k < n and x < width - 12:
            w = rng.randint(8, 90)
            if x + w > width - 2 or y + row_h > height - 2:
                break
            label = rng.choice(WORDS) if rng.random() < 0.8 else " ".join(rng.sample(WORDS, 3))
            if rng.random() < 0.05:
                label = "x" * rng.randint(41, 60)
            if rng.random() < 0.03:
                label = ""
            cat = rng.choice(list(UiCategory)) if rng.random() < 0.5 else None
            ocr = label if rng.random() < 0.4 else None
            dy = rng.randint(0, max(0, row_h // 3))
            box = BoundingBox(x, y + dy, x + w, min(y + dy + row_h, height))
            el = UiElement(f"{sid}-e{k:03d}", sid, box, label, ocr, cat)
            placed.append(PlacedElement(el, next_visual[0]))
            next_visual[0] += 1
            k += 1
            x += w + rng.randint(0, 40)
        y += row_h + rng.randint(0, 20)
    return placed


def random_corpus(
    out_dir: Union[str, Path],
    n_screenshots: int = 5,
    elements: tuple[int, int] = (10, 60),
    seed: int = 0,
    size_choices: Sequence[tuple[int, int]] = ((640, 400), (800, 600), (1024, 640)),
    images: bool = True,
) -> Corpus:
    rng = random.Random(seed)
    shots = []
    next_visual = [0]
    apps = sorted(APP_CATEGORIES)
    for i in range(n_screenshots):
        sid = f"s{i:04d}"
        w, h = rng.choice(list(size_choices))
        app = rng.choice(apps)
        shot = Screenshot(sid, app, APP_CATEGORIES[app], w, h, f"images/{sid}.png")
        shots.append((shot, random_layout(rng, sid, w, h, rng.randint(*elements), next_visual)))
    return write_corpus(out_dir, shots, images=images)


def dedup_fixture(
    out_dir: Union[str, Path], n_visuals: int = 40, total: int = 100, seed: int = 0
) -> tuple[Corpus, dict[str, int]]:
    """``total`` elements drawn from ``n_visuals`` visuals (each used 2-3 times).

    Returns the corpus and element_id -> visual id (the ground-truth cluster).
    Labels repeat across some visuals so the hash gate, not only the label
    gate, has to separate them.
    """
    rng = random.Random(seed)
    extra = total - 2 * n_visuals
    if not 0 <= extra <= n_visuals:
        raise ValueError("total must be between 2x and 3x n_visuals")
    copies = [2] * n_visuals
    for v in rng.sample(range(n_visuals), extra):
        copies[v] = 3
    labels = {v: WORDS[v % 12] for v in range(n_visuals)}  # 12 labels over 40 visuals
    sizes = {v: (rng.randint(10, 40), rng.randint(16, 60)) for v in range(n_visuals)}
    jobs = [v for v in range(n_visuals) for _ in range(copies[v])]
    rng.shuffle(jobs)
    n_shots = 10
    per_shot: list[list[int]] = [[] for _ in range(n_shots)]
    for i, v in enumerate(jobs):
        per_shot[i % n_shots].append(v)
    shots = []
    truth: dict[str, int] = {}
    for si, vs in enumerate(per_shot):
        sid = f"d{si:02d}"
        placed = []
        x, y = 5, 5
        for k, v in enumerate(vs):
            h, w = sizes[v]
            if x + w > 630:
                x, y = 5, y + 70
            eid = f"{sid}-e{k:02d}"
            label = labels[v] if rng.random() < 0.8 else "  " + labels[v].upper() + " "
            placed.append(PlacedElement(UiElement(eid, sid, BoundingBox(x, y, x + w, y + h), label), v))
            truth[eid] = v
            x += w + 7
        shots.append((Screenshot(sid, "GIMP", "Graphics and Design", 640, 480, f"images/{sid}.png"), placed))
    return write_corpus(out_dir, shots, name="dedup-fixture"), truth


def benchmark_records(n: int, seed: int = 0, image: tuple[int, int] = (1920, 1080)) -> list[dict]:
    """Random benchmark rows with platform/modality/category tags."""
    rng = random.Random(seed)
    w, h = image
    rows = []
    for i in range(n):
        bw, bh = rng.randint(1, 200), rng.randint(1, 120)
        x1, y1 = rng.randint(0, w - bw), rng.randint(0, h - bh)
        tags = {"platform": rng.choice(["desktop", "mobile", "web"])}
        if rng.random() < 0.8:
            tags["modality"] = rng.choice(["text", "icon"])
        if rng.random() < 0.6:
            tags["category"] = rng.choice(["CAD", "Office", "Dev", "Creative"])
        rows.append({
            "id": f"b{i:05d}",
            "image_w": w,
            "image_h": h,
            "instruction": f"click target {i}",
            "gt_box": [x1, y1, x1 + bw, y1 + bh],
            "tags": tags,
        })
    return rows
