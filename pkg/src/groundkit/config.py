"""Run configuration: defaults, then a JSON config file, then command-line flags."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Optional, Union


@dataclass
class DedupSection:
    threshold: int = 5
    label_mode: str = "normalized"
    min_crop_px: int = 8


@dataclass
class SynthSection:
    kinds: list[str] = field(default_factory=lambda: ["direct", "functional", "spatial"])
    max_gap_px: float = 200.0
    retry_rejected: int = 0
    model: str = "Qwen2.5-VL-72B-Instruct"
    max_in_flight: int = 4
    max_retries: int = 3


@dataclass
class MixSection:
    fractions: list[float] = field(default_factory=lambda: [0.50, 0.35, 0.15])
    total: Optional[int] = None


@dataclass
class EvalSection:
    coord_space: Optional[str] = None
    strict_ids: bool = False
    exclusive_bounds: bool = False
    pick: str = "last"


@dataclass
class RewardServerSection:
    listen: Optional[str] = None


@dataclass
class GlobalConfig:
    corpus: Optional[str] = None
    seed: int = 0
    workers: int = 1
    log_level: str = "INFO"
    dedup: DedupSection = field(default_factory=DedupSection)
    synth: SynthSection = field(default_factory=SynthSection)
    mix: MixSection = field(default_factory=MixSection)
    eval: EvalSection = field(default_factory=EvalSection)
    reward_server: RewardServerSection = field(default_factory=RewardServerSection)

    def to_dict(self) -> dict:
        return asdict(self)


class ConfigError(ValueError):
    pass


def _apply(target: Any, values: dict, where: str) -> None:
    known = {f.name: f for f in fields(target)}
    for key, val in values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {where}{key!r}")
        cur = getattr(target, key)
        if is_dataclass(cur):
            if not isinstance(val, dict):
                raise ConfigError(f"config section {where}{key!r} must be an object")
            _apply(cur, val, f"{where}{key}.")
        else:
            setattr(target, key, val)


def load_config(path: Optional[Union[str, Path]] = None, env: Optional[dict] = None) -> GlobalConfig:
    env = os.environ if env is None else env
    cfg = GlobalConfig()
    if env.get("GROUNDKIT_WORKERS"):
        try:
            cfg.workers = int(env["GROUNDKIT_WORKERS"])
        except ValueError:
            raise ConfigError(f"GROUNDKIT_WORKERS must be an integer, got {env['GROUNDKIT_WORKERS']!r}") from None
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed config ({exc.msg})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        _apply(cfg, data, "")
    return cfg


def override(cfg: GlobalConfig, dotted: dict[str, Any]) -> GlobalConfig:
    """Apply flag values given as ``{"section.key": value}``; ``None`` means unset."""
    for key, val in dotted.items():
        if val is None:
            continue
        *parents, leaf = key.split(".")
        obj = cfg
        for p in parents:
            obj = getattr(obj, p)
        if leaf not in {f.name for f in fields(obj)}:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(obj, leaf, val)
    return cfg
