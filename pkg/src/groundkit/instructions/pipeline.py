"""Run instruction synthesis over a deduplicated element pool."""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from ..corpus import Corpus, UiCategory, UiElement
from .client import ClientConfig, submit_prompts
from .prompts import PromptKind, PromptRequest, build_prompt, validate_response
from .synth import (
    InstructionSample,
    Kind,
    Provenance,
    SpatialConfig,
    Subkind,
    derive_rng,
    is_textual,
    make_general_instruction,
    make_spatial_instruction,
    make_textual_instruction,
    spatial_relations,
)

log = logging.getLogger(__name__)

POOL_META = "pool.json"
FUNCTIONAL_CATEGORIES = {UiCategory.BUTTON, UiCategory.MENU}
MODEL_SUBKIND = {
    PromptKind.DESCRIPTION: (Kind.DIRECT, Subkind.DESCRIPTION),
    PromptKind.VISUAL_CAPTION: (Kind.DIRECT, Subkind.VISUAL),
    PromptKind.GENERAL_INSTRUCTION: (Kind.DIRECT, Subkind.GENERAL),
    PromptKind.FUNCTIONAL_GOAL: (Kind.FUNCTIONAL, Subkind.FUNCTIONAL_GOAL),
}


@dataclass
class SynthResult:
    samples: dict[Kind, list[InstructionSample]] = field(default_factory=lambda: {k: [] for k in Kind})
    rejected: Counter = field(default_factory=Counter)

    def all(self) -> list[InstructionSample]:
        return [s for k in Kind for s in self.samples[k]]


def _template_samples(
    corpus: Corpus,
    sid: str,
    targets: Sequence[UiElement],
    kinds: set[Kind],
    seed: int,
    spatial_cfg: SpatialConfig,
) -> list[InstructionSample]:
    out = []
    on_screen = corpus.elements_of(sid)
    for e in targets:
        try:
            if Kind.DIRECT in kinds and e.label.strip():
                if is_textual(e):
                    out.append(make_textual_instruction(e, rng_seed=seed))
                else:
                    out.append(make_general_instruction(e, rng_seed=seed))
            if Kind.SPATIAL in kinds:
                rels = spatial_relations(e, on_screen, spatial_cfg)
                if rels:
                    rng = derive_rng(seed, e.id, "spatial")
                    rel = rng.choice(rels)
                    anchors = [corpus.elements[a] for a in rel.anchors]
                    out.append(make_spatial_instruction(e, rel.relation, anchors, rng=rng))
        except ValueError as exc:
            # labels that read like template placeholders fail the sample check
            log.warning("no template sample for %s: %s", e.id, exc)
    return out


def model_requests(corpus: Corpus, targets: Iterable[UiElement], kinds: set[Kind]) -> list[PromptRequest]:
    reqs = []
    for e in targets:
        if not e.label.strip():
            continue
        shot = corpus.screenshots[e.screenshot_id]
        wanted = []
        if Kind.DIRECT in kinds:
            visual = e.ui_category is UiCategory.VISUAL_ELEMENTS
            wanted.append(PromptKind.VISUAL_CAPTION if visual else PromptKind.DESCRIPTION)
        if Kind.FUNCTIONAL in kinds and e.ui_category in FUNCTIONAL_CATEGORIES:
            wanted.append(PromptKind.FUNCTIONAL_GOAL)
        for pk in wanted:
            reqs.append(build_prompt(
                pk,
                platform=shot.app_name,
                label=e.label.strip(),
                full_image_ref=str(corpus.image_file(shot.id)),
                crop_image_ref=None,
                request_id=f"{e.id}:{pk.value}",
                bbox=tuple(e.bbox.to_list()),
            ))
    return reqs


def synthesize(
    corpus: Corpus,
    element_ids: Sequence[str],
    kinds: Iterable[Union[Kind, str]] = tuple(Kind),
    seed: int = 0,
    client_cfg: Optional[ClientConfig] = None,
    spatial_cfg: Optional[SpatialConfig] = None,
    workers: int = 1,
    retry_rejected: int = 0,
    transport=None,
    sleep=None,
) -> SynthResult:
    """Build instruction samples for the given elements.

    Template subkinds always run. Model-backed subkinds run only when
    ``client_cfg`` points at an endpoint; rejected model responses are
    dropped unless ``retry_rejected`` grants extra attempts.
    """
    kinds = {Kind(k) for k in kinds}
    spatial_cfg = spatial_cfg or SpatialConfig()
    missing = [eid for eid in element_ids if eid not in corpus.elements]
    if missing:
        raise KeyError(f"{len(missing)} element ids not in corpus, first: {missing[0]!r}")
    by_shot: dict[str, list[UiElement]] = defaultdict(list)
    for eid in element_ids:
        e = corpus.elements[eid]
        by_shot[e.screenshot_id].append(e)

    result = SynthResult()
    shots = sorted(by_shot)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        chunks = pool.map(
            lambda sid: _template_samples(corpus, sid, by_shot[sid], kinds, seed, spatial_cfg), shots
        )
        for chunk in chunks:
            for s in chunk:
                result.samples[s.kind].append(s)

    if client_cfg is not None and client_cfg.configured and kinds & {Kind.DIRECT, Kind.FUNCTIONAL}:
        targets = [corpus.elements[eid] for eid in element_ids]
        pending = model_requests(corpus, targets, kinds)
        kwargs = {"transport": transport}
        if sleep is not None:
            kwargs["sleep"] = sleep
        for round_no in range(retry_rejected + 1):
            if not pending:
                break
            responses = submit_prompts(pending, client_cfg, **kwargs)
            retry = []
            for req, resp in zip(pending, responses):
                text, reason = validate_response(resp)
                if text is None:
                    result.rejected[reason.split(" (")[0]] += 1
                    retry.append(req)
                    continue
                eid = req.id.rsplit(":", 1)[0]
                e = corpus.elements[eid]
                kind, sub = MODEL_SUBKIND[req.prompt_kind]
                result.samples[kind].append(InstructionSample(
                    id=f"{eid}:{kind.value}:{sub.value}:model",
                    screenshot_id=e.screenshot_id,
                    element_id=eid,
                    instruction=text,
                    kind=kind,
                    subkind=sub,
                    provenance=Provenance.MODEL,
                ))
            pending = retry

    for k in Kind:
        result.samples[k].sort(key=lambda s: s.id)
    return result


def write_pool(result: SynthResult, out_dir: Union[str, Path], meta: dict) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts = {}
    for k in Kind:
        with open(out_dir / f"{k.value}.jsonl", "w", encoding="utf-8") as fh:
            for s in result.samples[k]:
                fh.write(json.dumps(s.to_dict(), ensure_ascii=False) + "\n")
        counts[k.value] = len(result.samples[k])
    meta = dict(meta, counts=counts, rejected=dict(sorted(result.rejected.items())))
    (out_dir / POOL_META).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out_dir


def read_pool(pool_dir: Union[str, Path]) -> tuple[dict[Kind, list[InstructionSample]], dict]:
    pool_dir = Path(pool_dir)
    meta_path = pool_dir / POOL_META
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.is_file() else {}
    samples: dict[Kind, list[InstructionSample]] = {}
    for k in Kind:
        path = pool_dir / f"{k.value}.jsonl"
        rows = []
        if path.is_file():
            with open(path, encoding="utf-8") as fh:
                rows = [InstructionSample.from_dict(json.loads(line)) for line in fh if line.strip()]
        samples[k] = rows
    return samples, meta
