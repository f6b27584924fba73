"""Near-duplicate element removal by label match plus perceptual hash distance.

Hash recipe (pinned so hashes are reproducible anywhere):

1. crop -> float grayscale, luma = 0.299 R + 0.587 G + 0.114 B
2. crops smaller than ``min_crop_px`` on a side are edge-padded up to it
3. bilinear resample to 32x32 (half-pixel centres, no antialias)
4. orthonormal 2D DCT-II
5. coefficients: the 8x8 low-frequency block minus DC, row-major, then (0, 8)
6. bit = coefficient > median (ties -> 0), first coefficient in the top bit
"""

from __future__ import annotations

import logging
import random
import unicodedata
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.fft import dctn

from .corpus import Corpus, UiElement

log = logging.getLogger(__name__)

HASH_SIZE = 32
LOW_FREQ = 8
# coefficient positions feeding the 64 hash bits
HASH_POSITIONS = tuple((r, c) for r in range(LOW_FREQ) for c in range(LOW_FREQ) if (r, c) != (0, 0)) + (
    (0, LOW_FREQ),
)
_TIE_RTOL = 1e-9


@dataclass(frozen=True, order=True)
class PerceptualHash:
    bits: int

    def __post_init__(self) -> None:
        if not 0 <= self.bits < 1 << 64:
            raise ValueError("hash must fit in 64 bits")

    def __str__(self) -> str:
        return f"{self.bits:016x}"

    @classmethod
    def from_hex(cls, s: str) -> "PerceptualHash":
        return cls(int(s, 16))


class LabelMode(str, Enum):
    EXACT = "exact"
    NORMALIZED = "normalized"


@dataclass
class DedupConfig:
    hamming_threshold: int = 5
    label_mode: LabelMode = LabelMode.NORMALIZED
    min_crop_px: int = 8

    def __post_init__(self) -> None:
        self.label_mode = LabelMode(self.label_mode)
        if not 0 <= self.hamming_threshold <= 64:
            raise ValueError(f"hamming_threshold must be in 0..64, got {self.hamming_threshold}")
        if self.min_crop_px < 1:
            raise ValueError("min_crop_px must be >= 1")


@dataclass
class DedupReport:
    input_count: int = 0
    unique_count: int = 0
    skipped: list[str] = field(default_factory=list)
    cluster_size_histogram: dict[int, int] = field(default_factory=dict)
    # representative id -> member ids (sorted by corpus order)
    clusters: dict[str, list[str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "unique_count": self.unique_count,
            "skipped_count": len(self.skipped),
            "skipped": list(self.skipped),
            "cluster_size_histogram": {str(k): v for k, v in sorted(self.cluster_size_histogram.items())},
            "clusters": [
                {"representative": rep, "size": len(m), "members": m} for rep, m in self.clusters.items()
            ],
        }


def to_grayscale(pixels: np.ndarray) -> np.ndarray:
    a = np.asarray(pixels, dtype=np.float64)
    if a.ndim == 2:
        return a
    if a.ndim == 3 and a.shape[2] >= 3:
        return a[..., 0] * 0.299 + a[..., 1] * 0.587 + a[..., 2] * 0.114
    if a.ndim == 3 and a.shape[2] in (1, 2):
        return a[..., 0]
    raise ValueError(f"unsupported pixel array shape {a.shape}")


@lru_cache(maxsize=512)
def _bilinear_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row i holds the weights mapping n_in samples onto output sample i."""
    m = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        src = min(max((i + 0.5) * scale - 0.5, 0.0), n_in - 1.0)
        lo = int(np.floor(src))
        hi = min(lo + 1, n_in - 1)
        frac = src - lo
        m[i, lo] += 1.0 - frac
        m[i, hi] += frac
    m.setflags(write=False)
    return m


def resize_bilinear(gray: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = gray.shape
    return _bilinear_matrix(h, out_h) @ gray @ _bilinear_matrix(w, out_w).T


def pad_to_min(gray: np.ndarray, min_px: int) -> np.ndarray:
    h, w = gray.shape
    ph, pw = max(min_px - h, 0), max(min_px - w, 0)
    if ph == 0 and pw == 0:
        return gray
    return np.pad(gray, ((ph // 2, ph - ph // 2), (pw // 2, pw - pw // 2)), mode="edge")


def bits_from_coefficients(coeffs: Sequence[float]) -> int:
    v = np.asarray(coeffs, dtype=np.float64)
    med = float(np.median(v))
    tol = _TIE_RTOL * max(1.0, float(np.max(np.abs(v))))
    out = 0
    for bit in (v > med + tol):
        out = (out << 1) | int(bit)
    return out


def phash(crop: np.ndarray, min_crop_px: int = 8) -> PerceptualHash:
    """64-bit perceptual hash of an image crop (HxW gray or HxWxC color array)."""
    gray = to_grayscale(crop)
    if gray.size == 0:
        raise ValueError("cannot hash a zero-area crop")
    gray = pad_to_min(gray, min_crop_px)
    small = resize_bilinear(gray, HASH_SIZE, HASH_SIZE)
    coeffs = dctn(small, type=2, norm="ortho")
    rows, cols = zip(*HASH_POSITIONS)
    return PerceptualHash(bits_from_coefficients(coeffs[list(rows), list(cols)]))


def hamming(a: PerceptualHash, b: PerceptualHash) -> int:
    return (a.bits ^ b.bits).bit_count()


def normalize_label(s: str) -> str:
    """Unicode-aware lowercase, trimmed, inner whitespace runs collapsed."""
    return " ".join(unicodedata.normalize("NFC", s).casefold().split())


def label_key(label: str, mode: LabelMode) -> str:
    return label if LabelMode(mode) is LabelMode.EXACT else normalize_label(label)


def crop_pixels(image: np.ndarray, e: UiElement) -> np.ndarray:
    """Pixels covered by the element box; degenerate boxes still yield >= 1 px."""
    h, w = image.shape[:2]
    b = e.bbox
    x0 = min(max(int(np.floor(b.x1)), 0), w - 1)
    y0 = min(max(int(np.floor(b.y1)), 0), h - 1)
    x1 = min(max(int(np.ceil(b.x2)), x0 + 1), w)
    y1 = min(max(int(np.ceil(b.y2)), y0 + 1), h)
    return image[y0:y1, x0:x1]


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # smaller index as root keeps results independent of merge order
            if rj < ri:
                ri, rj = rj, ri
            self.parent[rj] = ri


def cluster_hashes(keys: Sequence[str], hashes: Sequence[PerceptualHash], threshold: int) -> list[list[int]]:
    """Partition item indices: transitive closure of (same key and hamming <= threshold).

    Clusters come back ordered by their smallest member index.
    """
    uf = _UnionFind(len(keys))
    buckets: dict[str, list[int]] = defaultdict(list)
    for i, k in enumerate(keys):
        buckets[k].append(i)
    for idx in buckets.values():
        if len(idx) < 2:
            continue
        hv = np.array([hashes[i].bits for i in idx], dtype=np.uint64)
        for a in range(len(idx) - 1):
            dist = np.bitwise_count(hv[a + 1:] ^ hv[a])
            for b in np.nonzero(dist <= threshold)[0]:
                uf.union(idx[a], idx[a + 1 + int(b)])
    groups: dict[int, list[int]] = defaultdict(list)
    for i in range(len(keys)):
        groups[uf.find(i)].append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def pick_representatives(
    clusters: Sequence[Sequence[str]], screenshot_of: dict[str, str], seed: int
) -> list[str]:
    """One member per cluster, spread across screenshots.

    Screenshots are visited round-robin in a seeded order, each yielding its
    next element from a seeded shuffle; an element becomes its cluster's
    representative if the cluster has none yet.
    """
    rng = random.Random(seed)
    cluster_of = {eid: ci for ci, members in enumerate(clusters) for eid in members}
    per_shot: dict[str, list[str]] = defaultdict(list)
    for eid in sorted(cluster_of):
        per_shot[screenshot_of[eid]].append(eid)
    order = sorted(per_shot)
    rng.shuffle(order)
    queues = []
    for sid in order:
        q = per_shot[sid]
        rng.shuffle(q)
        queues.append(q)
    taken = [False] * len(clusters)
    picked: list[str] = []
    depth = 0
    while len(picked) < len(clusters):
        for q in queues:
            if depth < len(q):
                ci = cluster_of[q[depth]]
                if not taken[ci]:
                    taken[ci] = True
                    picked.append(q[depth])
        depth += 1
    return picked


def _hash_screenshot(c: Corpus, sid: str, cfg: DedupConfig) -> tuple[dict[str, PerceptualHash], list[str]]:
    from PIL import Image

    elems = c.elements_of(sid)
    try:
        with Image.open(c.image_file(sid)) as im:
            arr = np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as exc:
        log.warning("skipping %d elements of %s: unreadable image (%s)", len(elems), sid, exc)
        return {}, [e.id for e in elems]
    out = {}
    skipped = []
    for e in elems:
        try:
            out[e.id] = phash(crop_pixels(arr, e), cfg.min_crop_px)
        except ValueError as exc:
            log.warning("skipping element %s: %s", e.id, exc)
            skipped.append(e.id)
    return out, skipped


def hash_corpus(c: Corpus, cfg: DedupConfig, workers: int = 1) -> tuple[dict[str, PerceptualHash], list[str]]:
    sids = list(c.screenshots)
    hashes: dict[str, PerceptualHash] = {}
    skipped: list[str] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for h, s in pool.map(lambda sid: _hash_screenshot(c, sid, cfg), sids):
            hashes.update(h)
            skipped.extend(s)
    return hashes, skipped


def dedup_hashed(
    items: Iterable[tuple[str, str, str, PerceptualHash]],
    cfg: DedupConfig,
    seed: int,
) -> tuple[list[str], DedupReport]:
    """Dedup pre-hashed items given as (element_id, screenshot_id, label, hash)."""
    items = list(items)
    ids = [it[0] for it in items]
    keys = [label_key(it[2], cfg.label_mode) for it in items]
    groups = cluster_hashes(keys, [it[3] for it in items], cfg.hamming_threshold)
    clusters = [[ids[i] for i in g] for g in groups]
    screenshot_of = {it[0]: it[1] for it in items}
    reps = pick_representatives(clusters, screenshot_of, seed)
    cluster_of = {eid: ci for ci, members in enumerate(clusters) for eid in members}
    report = DedupReport(
        input_count=len(items),
        unique_count=len(clusters),
        cluster_size_histogram=dict(sorted(Counter(len(m) for m in clusters).items())),
        clusters={r: clusters[cluster_of[r]] for r in reps},
    )
    return reps, report


def dedup_elements(
    c: Corpus, cfg: Optional[DedupConfig] = None, seed: int = 0, workers: int = 1
) -> tuple[list[str], DedupReport]:
    """Collapse near-duplicate elements; returns representative ids and a report."""
    cfg = cfg or DedupConfig()
    hashes, skipped = hash_corpus(c, cfg, workers)
    items = [
        (eid, e.screenshot_id, e.label, hashes[eid])
        for eid, e in c.elements.items()
        if eid in hashes
    ]
    reps, report = dedup_hashed(items, cfg, seed)
    report.skipped = skipped
    return reps, report
