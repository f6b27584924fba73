"""Shipped template sets and prompt texts (package data, not code)."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

PROMPT_FILES = {
    "description": "description.txt",
    "general_instruction": "general_instruction.txt",
    "functional_goal": "functional_goal.txt",
    "visual_caption": "visual_caption.txt",
}


def _data():
    return resources.files("groundkit.instructions") / "data"


@lru_cache(maxsize=None)
def template_sets() -> dict:
    return json.loads((_data() / "templates.json").read_text(encoding="utf-8"))


def textual_templates() -> dict[int, str]:
    return {t["id"]: t["text"] for t in template_sets()["textual"]}


def general_templates() -> dict[int, str]:
    return {t["id"]: t["text"] for t in template_sets()["general"]}


def spatial_templates() -> dict[int, tuple[str, str]]:
    """template id -> (relation, text)"""
    return {t["id"]: (t["relation"], t["text"]) for t in template_sets()["spatial"]}


@lru_cache(maxsize=None)
def prompt_text(kind: str) -> str:
    return (_data() / "prompts" / PROMPT_FILES[kind]).read_text(encoding="utf-8").rstrip("\n")
