"""Independent brute-force references used to check the library.

Nothing here imports the code under test beyond plain data types, so a
shared bug cannot make both sides agree.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np


# -- geometry ---------------------------------------------------------------

def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9))
    g = lo + step * np.arange(n + 1)
    return np.unique(np.append(g, hi))


def grid_unsigned_distance(u, v, box, step=0.01):
    """Min distance from (u, v) to a ``step`` grid over the closed box.

    Minimising dx^2 + dy^2 over a product grid splits into one minimum per
    axis, so the search is exhaustive without materialising every pair.
    """
    x1, y1, x2, y2 = box
    gx, gy = _grid(x1, x2, step), _grid(y1, y2, step)
    ix, iy = np.argmin((gx - u) ** 2), np.argmin((gy - v) ** 2)
    return math.hypot(gx[ix] - u, gy[iy] - v), (float(gx[ix]), float(gy[iy]))


def grid_unsigned_distance_2d(u, v, box, step=0.01):
    """Same oracle evaluated over every grid point (small boxes only)."""
    x1, y1, x2, y2 = box
    gx, gy = np.meshgrid(_grid(x1, x2, step), _grid(y1, y2, step))
    return float(np.sqrt(((gx - u) ** 2 + (gy - v) ** 2).min()))


def _box_dist_sq_axis(g, lo, hi):
    return np.where(g < lo, lo - g, np.where(g > hi, g - hi, 0.0)) ** 2


def grid_max_distance(box, w, h, step=1.0):
    """Largest box distance over a ``step`` grid covering the whole image."""
    x1, y1, x2, y2 = box
    gx, gy = _grid(0.0, w, step), _grid(0.0, h, step)
    return math.sqrt(_box_dist_sq_axis(gx, x1, x2).max() + _box_dist_sq_axis(gy, y1, y2).max())


def grid_max_distance_2d(box, w, h, step=1.0):
    x1, y1, x2, y2 = box
    gx, gy = np.meshgrid(_grid(0.0, w, step), _grid(0.0, h, step))
    dx = np.maximum(np.maximum(x1 - gx, gx - x2), 0.0)
    dy = np.maximum(np.maximum(y1 - gy, gy - y2), 0.0)
    return float(np.sqrt(dx**2 + dy**2).max())


def edge_distance_samples(u, v, box, n=2001):
    """Min distance from an inside point to densely sampled box edges."""
    x1, y1, x2, y2 = box
    t = np.linspace(0.0, 1.0, n)
    xs, ys = x1 + t * (x2 - x1), y1 + t * (y2 - y1)
    pts = np.concatenate([
        np.stack([xs, np.full(n, y1)], 1),
        np.stack([xs, np.full(n, y2)], 1),
        np.stack([np.full(n, x1), ys], 1),
        np.stack([np.full(n, x2), ys], 1),
    ])
    return float(np.sqrt(((pts - [u, v]) ** 2).sum(1)).min())


# -- rewards ----------------------------------------------------------------

def naive_rloo(rewards):
    n = len(rewards)
    out = []
    for i in range(n):
        others = 0.0
        for j in range(n):
            if j != i:
                others += rewards[j]
        out.append(rewards[i] - others / (n - 1))
    return out


def table_reward(d):
    """The six-row reward table written out as literal comparisons."""
    if d < -0.5:
        return -1.0
    if -0.5 <= d < -0.1:
        return -0.5
    if -0.1 <= d < 0:
        return -0.1
    if 0 <= d < 0.1:
        return 0.1
    if 0.1 <= d < 0.5:
        return 0.5
    return 1.0


# -- perceptual hash --------------------------------------------------------

def naive_phash(pixels, min_px=8, size=32):
    """Loop-based version of the hash recipe (slow, small crops only)."""
    a = np.asarray(pixels, dtype=np.float64)
    if a.ndim == 3:
        a = 0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]
    h, w = a.shape
    ph, pw = max(min_px - h, 0), max(min_px - w, 0)
    top, left = ph // 2, pw // 2
    H, W = h + ph, w + pw

    def px(r, c):
        return a[min(max(r - top, 0), h - 1), min(max(c - left, 0), w - 1)]

    def src(i, n_in):
        s = (i + 0.5) * n_in / size - 0.5
        s = min(max(s, 0.0), n_in - 1.0)
        lo = int(math.floor(s))
        return lo, min(lo + 1, n_in - 1), s - lo

    small = [[0.0] * size for _ in range(size)]
    for i in range(size):
        r0, r1, fr = src(i, H)
        for j in range(size):
            c0, c1, fc = src(j, W)
            small[i][j] = (
                (1 - fr) * (1 - fc) * px(r0, c0)
                + (1 - fr) * fc * px(r0, c1)
                + fr * (1 - fc) * px(r1, c0)
                + fr * fc * px(r1, c1)
            )

    def alpha(k):
        return math.sqrt(1.0 / size) if k == 0 else math.sqrt(2.0 / size)

    def coef(k, l):
        s = 0.0
        for m in range(size):
            cm = math.cos(math.pi * (2 * m + 1) * k / (2 * size))
            for n in range(size):
                s += small[m][n] * cm * math.cos(math.pi * (2 * n + 1) * l / (2 * size))
        return alpha(k) * alpha(l) * s

    positions = [(r, c) for r in range(8) for c in range(8) if (r, c) != (0, 0)] + [(0, 8)]
    vals = [coef(r, c) for r, c in positions]
    med = float(np.median(vals))
    tol = 1e-9 * max(1.0, max(abs(x) for x in vals))
    bits = 0
    for x in vals:
        bits = (bits << 1) | int(x > med + tol)
    return bits


def popcount_distance(a, b):
    return bin(a ^ b).count("1")


def brute_clusters(keys, hashes, threshold):
    """Connected components of the pairwise predicate via depth-first search."""
    n = len(keys)
    adj = defaultdict(list)
    for i in range(n):
        for j in range(i + 1, n):
            if keys[i] == keys[j] and popcount_distance(hashes[i], hashes[j]) <= threshold:
                adj[i].append(j)
                adj[j].append(i)
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    stack.append(y)
        comps.append(frozenset(comp))
    return set(comps)


# -- spatial relations ------------------------------------------------------

def dedup_partition(corpus, threshold=5):
    """Clusters from loop-computed hashes and the O(n^2) predicate."""
    from PIL import Image

    ids = sorted(corpus.elements)
    images = {}
    keys, hashes = [], []
    for eid in ids:
        e = corpus.elements[eid]
        if e.screenshot_id not in images:
            with Image.open(corpus.image_file(e.screenshot_id)) as im:
                images[e.screenshot_id] = np.asarray(im.convert("RGB"))
        b = e.bbox
        crop = images[e.screenshot_id][int(b.y1):int(b.y2), int(b.x1):int(b.x2)]
        keys.append(" ".join(e.label.casefold().split()))
        hashes.append(naive_phash(crop))
    comps = brute_clusters(keys, hashes, threshold)
    return {frozenset(ids[i] for i in c) for c in comps}


def _norm(s):
    return " ".join(s.casefold().split())


def brute_spatial(target, elements, max_gap=200.0, min_overlap=0.5, max_len=40):
    """Evaluate each relation predicate pair by pair; returns a set of tuples."""
    counts = defaultdict(int)
    for e in elements:
        counts[_norm(e.label)] += 1

    def reliable(e):
        lab = e.label.strip()
        return bool(lab) and len(lab) <= max_len and counts[_norm(e.label)] == 1

    t = target.bbox
    cands = defaultdict(list)  # relation -> [(gap, anchor)]
    for a in elements:
        if a.id == target.id:
            continue
        b = a.bbox
        vov = min(b.y2, t.y2) - max(b.y1, t.y1)
        hov = min(b.x2, t.x2) - max(b.x1, t.x1)
        vshort = min(b.y2 - b.y1, t.y2 - t.y1)
        hshort = min(b.x2 - b.x1, t.x2 - t.x1)
        if b.x2 <= t.x1 and vov >= min_overlap * vshort:
            cands["right_of"].append((t.x1 - b.x2, a))
        if b.x1 >= t.x2 and vov >= min_overlap * vshort:
            cands["left_of"].append((b.x1 - t.x2, a))
        if b.y2 <= t.y1 and hov >= min_overlap * hshort:
            cands["below"].append((t.y1 - b.y2, a))
        if b.y1 >= t.y2 and hov >= min_overlap * hshort:
            cands["above"].append((b.y1 - t.y2, a))

    nearest = {}
    for rel, lst in cands.items():
        g = min(gap for gap, _ in lst)
        nearest[rel] = [(gap, a) for gap, a in lst if gap == g and reliable(a)]

    out = set()
    for rel, lst in nearest.items():
        for _, a in lst:
            out.add((rel, (a.id,)))
    for gl, a in nearest.get("right_of", []):
        for gr, b in nearest.get("left_of", []):
            if gl <= max_gap and gr <= max_gap:
                out.add(("between", (a.id, b.id)))
    return out


# -- evaluation -------------------------------------------------------------

def count_eval(records, preds):
    """records: dicts with id/gt_box/tags; preds: record_id -> (u, v) or None."""
    correct = total = missing = 0
    per = defaultdict(lambda: defaultdict(lambda: [0, 0]))
    keys = sorted({k for r in records for k in r["tags"]})
    for r in records:
        total += 1
        pt = preds.get(r["id"])
        if pt is None:
            missing += 1
            hit = False
        else:
            x1, y1, x2, y2 = r["gt_box"]
            hit = x1 <= pt[0] <= x2 and y1 <= pt[1] <= y2
        correct += hit
        for k in keys:
            cell = per[k][r["tags"].get(k, "untagged")]
            cell[0] += hit
            cell[1] += 1
    return {
        "correct": correct,
        "total": total,
        "missing": missing,
        "by_tag": {k: {v: tuple(c) for v, c in d.items()} for k, d in per.items()},
    }
