"""Prompt assembly for model-generated instructions and response validation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .templates import prompt_text

# phrases that leak the annotation overlay into the instruction
FORBIDDEN_PHRASES = ("bounding box", "highlighted")
TEXT_KEYS = ("description", "instruction", "function", "caption")

_FENCE_RE = re.compile(r"^\s*```(?:json)?\s*(.*?)\s*```\s*$", re.DOTALL)


class PromptKind(str, Enum):
    DESCRIPTION = "description"
    GENERAL_INSTRUCTION = "general_instruction"
    FUNCTIONAL_GOAL = "functional_goal"
    VISUAL_CAPTION = "visual_caption"


RESPONSE_KEY = {
    PromptKind.DESCRIPTION: "description",
    PromptKind.GENERAL_INSTRUCTION: "instruction",
    PromptKind.FUNCTIONAL_GOAL: "function",
    PromptKind.VISUAL_CAPTION: "caption",
}


@dataclass(frozen=True)
class PromptRequest:
    id: str
    prompt_kind: PromptKind
    platform: str
    element_label: str
    rendered_prompt: str
    full_image_ref: Optional[str] = None
    crop_image_ref: Optional[str] = None
    # target box in full-image pixels, used to draw the marker on attachments
    bbox: Optional[tuple[float, float, float, float]] = None


@dataclass
class ModelResponse:
    request_id: str
    raw: str = ""
    parsed: Optional[dict] = None
    error: Optional[str] = None
    attempts: int = 0
    extra: dict = field(default_factory=dict)


def render_prompt(kind: PromptKind, platform: str, label: str) -> str:
    # replace the label last so a label containing "{platform}" stays literal
    return prompt_text(PromptKind(kind).value).replace("{platform}", platform).replace("{text}", label)


def build_prompt(
    kind: PromptKind | str,
    platform: str,
    label: str,
    full_image_ref: Optional[str] = None,
    crop_image_ref: Optional[str] = None,
    request_id: str = "",
    bbox: Optional[tuple[float, float, float, float]] = None,
) -> PromptRequest:
    kind = PromptKind(kind)
    if not label.strip():
        raise ValueError("element label must be non-empty")
    return PromptRequest(
        id=request_id,
        prompt_kind=kind,
        platform=platform,
        element_label=label,
        rendered_prompt=render_prompt(kind, platform, label),
        full_image_ref=full_image_ref,
        crop_image_ref=crop_image_ref,
        bbox=bbox,
    )


def parse_response(raw: str) -> Optional[dict]:
    """``{"visible": bool, "text": str}`` when raw is JSON with the required keys."""
    m = _FENCE_RE.match(raw or "")
    body = m.group(1) if m else (raw or "")
    try:
        obj = json.loads(body)
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict) or not isinstance(obj.get("visible"), bool):
        return None
    for key in TEXT_KEYS:
        if isinstance(obj.get(key), str):
            return {"visible": obj["visible"], "text": obj[key]}
    return None


def validate_response(r: ModelResponse) -> tuple[Optional[str], Optional[str]]:
    """Return ``(text, None)`` when accepted, else ``(None, reason)``."""
    if r.error:
        return None, f"request failed: {r.error}"
    parsed = r.parsed if r.parsed is not None else parse_response(r.raw)
    if parsed is None:
        return None, "malformed response"
    if not parsed["visible"]:
        return None, "not visible"
    text = parsed["text"].strip()
    if not text:
        return None, "empty text"
    low = text.lower()
    for phrase in FORBIDDEN_PHRASES:
        if phrase in low:
            return None, f"references annotation artifact ({phrase!r})"
    return text, None
