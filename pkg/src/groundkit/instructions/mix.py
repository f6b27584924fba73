"""Training-mix sampling, SFT export and RL data selection."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from ..corpus import Corpus
from ..geometry import BoundingBox, Point, point_in_box
from .synth import InstructionSample, Kind

DEFAULT_FRACTIONS = {Kind.DIRECT: 0.50, Kind.FUNCTIONAL: 0.35, Kind.SPATIAL: 0.15}


class InsufficientPoolError(ValueError):
    pass


@dataclass
class MixSpec:
    total: int
    fractions: dict[Kind, float] = field(default_factory=lambda: dict(DEFAULT_FRACTIONS))

    def __post_init__(self) -> None:
        self.fractions = {Kind(k): float(v) for k, v in self.fractions.items()}
        if self.total < 0:
            raise ValueError("total must be >= 0")
        if any(v < 0 for v in self.fractions.values()):
            raise ValueError("fractions must be non-negative")
        if abs(math.fsum(self.fractions.values()) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {math.fsum(self.fractions.values())}")


def mix_counts(spec: MixSpec) -> dict[Kind, int]:
    """Per-kind counts by largest remainder; ties go to the earlier kind."""
    kinds = [k for k in Kind if k in spec.fractions]
    # decimal-string Fractions make 0.35 * 700000 exactly 245000
    quotas = {k: Fraction(repr(spec.fractions[k])) * spec.total for k in kinds}
    scale = sum(Fraction(repr(spec.fractions[k])) for k in kinds)
    if scale != 1:
        quotas = {k: q / scale for k, q in quotas.items()}
    counts = {k: math.floor(q) for k, q in quotas.items()}
    left = spec.total - sum(counts.values())
    by_remainder = sorted(kinds, key=lambda k: (-(quotas[k] - counts[k]), kinds.index(k)))
    for k in by_remainder[:left]:
        counts[k] += 1
    return counts


def sample_mix(
    pool: Mapping[Kind, Sequence[InstructionSample]] | Iterable[InstructionSample],
    spec: MixSpec,
    seed: int,
) -> list[InstructionSample]:
    """Seeded draw without replacement giving exactly ``mix_counts(spec)`` per kind."""
    if not isinstance(pool, Mapping):
        grouped: dict[Kind, list[InstructionSample]] = {}
        for s in pool:
            grouped.setdefault(s.kind, []).append(s)
        pool = grouped
    counts = mix_counts(spec)
    rng = random.Random(seed)
    chosen: list[InstructionSample] = []
    for kind, n in counts.items():
        candidates = sorted(pool.get(kind, ()), key=lambda s: s.id)
        if len(candidates) < n:
            raise InsufficientPoolError(
                f"pool has {len(candidates)} {kind.value} samples, need {n} (short by {n - len(candidates)})"
            )
        chosen.extend(rng.sample(candidates, n))
    rng.shuffle(chosen)
    return chosen


def sft_record(s: InstructionSample, corpus: Corpus) -> dict:
    if s.element_id not in corpus.elements:
        raise KeyError(f"sample {s.id}: element {s.element_id!r} not in corpus")
    e = corpus.elements[s.element_id]
    c = e.bbox.center
    return {
        "image": corpus.screenshots[e.screenshot_id].image_path,
        "instruction": s.instruction,
        "target_point": [c.u, c.v],
        "target_box": e.bbox.to_list(),
        "kind": s.kind.value,
        "element_id": e.id,
    }


def export_sft(dataset: Sequence[InstructionSample], corpus: Corpus, out_path: Union[str, Path]) -> int:
    records = [sft_record(s, corpus) for s in dataset]
    with open(out_path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
    return len(records)


def load_sft(path: Union[str, Path]) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def select_rl_unseen(pool: Iterable[str], sft_used: Iterable[str], k: int, seed: int) -> list[str]:
    """k element ids drawn uniformly from the pool minus anything used for SFT."""
    unseen = sorted(set(pool) - set(sft_used))
    if k > len(unseen):
        raise InsufficientPoolError(f"only {len(unseen)} unseen elements available, need {k}")
    return random.Random(seed).sample(unseen, k)


def rejection_sample_errors(
    records: Iterable[tuple[InstructionSample, Point, BoundingBox]] | Iterable[tuple[dict, Point]],
    k: int,
    seed: int,
) -> list:
    """Keep the samples the model got wrong, then draw up to k of them.

    Records are ``(sample, predicted_point, target_box)`` or SFT-style
    ``(record_dict, predicted_point)`` where the dict carries ``target_box``.
    """
    errors = []
    for rec in records:
        if len(rec) == 3:
            sample, pred, box = rec
        else:
            sample, pred = rec
            box = BoundingBox.from_list(sample["target_box"])
        if not point_in_box(pred, box):
            errors.append(sample)
    if k >= len(errors):
        return errors
    rng = random.Random(seed)
    picked = sorted(rng.sample(range(len(errors)), k))
    return [errors[i] for i in picked]
