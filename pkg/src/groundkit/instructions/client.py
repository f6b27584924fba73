"""Chat-completion client for model-backed instruction generation.

This is the only code in the package that touches the network. Requests run
on a thread pool capped at ``max_in_flight``; transient failures (connection
errors, 429, 5xx) are retried with exponential backoff and a call that still
fails becomes an error record instead of aborting the batch.
"""

from __future__ import annotations

import base64
import io
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import httpx

from .prompts import ModelResponse, PromptRequest, parse_response

log = logging.getLogger(__name__)

ENV_URL = "GROUNDKIT_LLM_URL"
ENV_KEY = "GROUNDKIT_LLM_KEY"
RETRY_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


@dataclass
class ClientConfig:
    url: Optional[str] = None
    api_key: Optional[str] = None
    model: str = "Qwen2.5-VL-72B-Instruct"
    max_in_flight: int = 4
    max_retries: int = 3
    backoff_base: float = 1.0
    backoff_max: float = 30.0
    timeout: float = 120.0
    temperature: float = 0.0
    max_tokens: int = 256
    crop_margin_px: int = 48

    @classmethod
    def from_env(cls, **overrides) -> "ClientConfig":
        cfg = cls(url=os.environ.get(ENV_URL) or None, api_key=os.environ.get(ENV_KEY) or None)
        for k, v in overrides.items():
            if v is not None:
                setattr(cfg, k, v)
        return cfg

    @property
    def configured(self) -> bool:
        return bool(self.url)


class _Transient(Exception):
    pass


def _png_data_url(img) -> str:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii")


def attachments(req: PromptRequest, margin: int = 48) -> list[str]:
    """Full screenshot and a zoomed crop, both with the target outlined in red."""
    if not req.full_image_ref:
        return []
    from PIL import Image, ImageDraw

    with Image.open(req.full_image_ref) as src:
        full = src.convert("RGB")
    if req.bbox is None:
        return [_png_data_url(full)]
    x1, y1, x2, y2 = req.bbox
    ImageDraw.Draw(full).rectangle([x1, y1, x2, y2], outline=(255, 0, 0), width=2)
    crop = full.crop((
        max(int(x1) - margin, 0),
        max(int(y1) - margin, 0),
        min(int(x2) + margin + 1, full.width),
        min(int(y2) + margin + 1, full.height),
    ))
    return [_png_data_url(full), _png_data_url(crop)]


def chat_payload(req: PromptRequest, cfg: ClientConfig, images: Sequence[str] = ()) -> dict:
    content = [{"type": "image_url", "image_url": {"url": u}} for u in images]
    content.append({"type": "text", "text": req.rendered_prompt})
    return {
        "model": cfg.model,
        "messages": [{"role": "user", "content": content}],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }


def _call(client: httpx.Client, cfg: ClientConfig, payload: dict) -> str:
    try:
        resp = client.post(cfg.url, json=payload)
    except httpx.TransportError as exc:
        raise _Transient(f"transport error: {exc}") from exc
    if resp.status_code in RETRY_STATUS:
        raise _Transient(f"HTTP {resp.status_code}")
    if resp.status_code >= 400:
        raise RuntimeError(f"HTTP {resp.status_code}: {resp.text[:200]}")
    body = resp.json()
    return body["choices"][0]["message"]["content"]


def _one(
    req: PromptRequest,
    client: httpx.Client,
    cfg: ClientConfig,
    sleep: Callable[[float], None],
) -> ModelResponse:
    try:
        payload = chat_payload(req, cfg, attachments(req, cfg.crop_margin_px))
    except OSError as exc:
        return ModelResponse(req.id, error=f"attachment error: {exc}")
    attempt = 0
    while True:
        attempt += 1
        try:
            raw = _call(client, cfg, payload)
            return ModelResponse(req.id, raw=raw, parsed=parse_response(raw), attempts=attempt)
        except _Transient as exc:
            if attempt > cfg.max_retries:
                return ModelResponse(req.id, error=f"{exc} after {attempt} attempts", attempts=attempt)
            delay = min(cfg.backoff_base * 2 ** (attempt - 1), cfg.backoff_max)
            log.debug("request %s: %s, retrying in %.2fs", req.id, exc, delay)
            sleep(delay)
        except (RuntimeError, KeyError, IndexError, TypeError, ValueError) as exc:
            return ModelResponse(req.id, error=str(exc), attempts=attempt)


def submit_prompts(
    requests: Sequence[PromptRequest],
    cfg: ClientConfig,
    transport: Optional[httpx.BaseTransport] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> list[ModelResponse]:
    """Send every request; responses come back in request order, one per request."""
    if not cfg.configured:
        raise ValueError(f"no model endpoint configured (set {ENV_URL})")
    headers = {"Authorization": f"Bearer {cfg.api_key}"} if cfg.api_key else {}
    with httpx.Client(transport=transport, headers=headers, timeout=cfg.timeout) as client:
        with ThreadPoolExecutor(max_workers=max(1, cfg.max_in_flight)) as pool:
            return list(pool.map(lambda r: _one(r, client, cfg, sleep), requests))
