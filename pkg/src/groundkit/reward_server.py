"""Newline-delimited JSON reward service for RL trainers.

Request (one per line)::

    {"id": "r1", "scheme": "discrete", "image": {"width": 1920, "height": 1080},
     "box": [x1, y1, x2, y2], "coord_space": "pixel",
     "rollouts": [{"point": [u, v]}, {"text": "click (0.5, 0.3)"}], "rloo": true}

Response (one per line, same order)::

    {"id": "r1", "rewards": [...], "advantages": [...]}   # advantages iff rloo
    {"id": "r1", "error": "..."}

``point`` rollouts are pixel coordinates; ``coord_space`` applies to ``text``
rollouts and is required when any are present. Unknown fields are ignored.
"""

from __future__ import annotations

import json
import logging
import math
import socketserver
import sys
from typing import IO, Any, Iterable, Iterator

from .evaluation import CoordSpace
from .geometry import BoundingBox, Point
from .rewards import Prediction, RewardScheme, RolloutGroup, rloo_advantages, score_group

log = logging.getLogger(__name__)


class RequestError(ValueError):
    pass


def _require(req: dict, key: str) -> Any:
    if key not in req:
        raise RequestError(f"missing field {key!r}")
    return req[key]


def _number(x: Any, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise RequestError(f"{what} must be a number")
    if not math.isfinite(x):
        raise RequestError(f"{what} must be finite")
    return float(x)


def parse_request(req: dict) -> tuple[RolloutGroup, RewardScheme, CoordSpace | None, bool]:
    try:
        scheme = RewardScheme(_require(req, "scheme"))
    except ValueError:
        raise RequestError(f"unknown scheme {req.get('scheme')!r}") from None
    image = _require(req, "image")
    if not isinstance(image, dict):
        raise RequestError("image must be an object with width and height")
    w = _number(_require(image, "width"), "image.width")
    h = _number(_require(image, "height"), "image.height")
    if w <= 0 or h <= 0:
        raise RequestError("image size must be positive")
    box_vals = _require(req, "box")
    if not isinstance(box_vals, list) or len(box_vals) != 4:
        raise RequestError("box must be [x1, y1, x2, y2]")
    try:
        box = BoundingBox(*(_number(v, "box coordinate") for v in box_vals))
    except RequestError:
        raise
    except ValueError as exc:
        raise RequestError(str(exc)) from None
    if not box.within(w, h):
        raise RequestError(f"box {box.to_list()} exceeds image bounds {w:g}x{h:g}")

    rollouts = _require(req, "rollouts")
    if not isinstance(rollouts, list) or not rollouts:
        raise RequestError("rollouts must be a non-empty list")
    preds = []
    for i, r in enumerate(rollouts):
        if not isinstance(r, dict):
            raise RequestError(f"rollout {i} must be an object")
        if "point" in r:
            pt = r["point"]
            if not isinstance(pt, list) or len(pt) != 2:
                raise RequestError(f"rollout {i}: point must be [u, v]")
            try:
                preds.append(Prediction(point=Point(_number(pt[0], "u"), _number(pt[1], "v"))))
            except RequestError:
                raise
            except ValueError as exc:
                raise RequestError(f"rollout {i}: {exc}") from None
        elif "text" in r:
            if not isinstance(r["text"], str):
                raise RequestError(f"rollout {i}: text must be a string")
            preds.append(Prediction(raw_text=r["text"]))
        else:
            raise RequestError(f"rollout {i} needs 'point' or 'text'")

    space = None
    if "coord_space" in req:
        try:
            space = CoordSpace(req["coord_space"])
        except ValueError:
            raise RequestError(f"unknown coord_space {req['coord_space']!r}") from None
    elif any(p.raw_text is not None for p in preds):
        raise RequestError("coord_space is required for text rollouts")

    rloo = req.get("rloo", False)
    if not isinstance(rloo, bool):
        raise RequestError("rloo must be true or false")
    if rloo and len(preds) < 2:
        raise RequestError("leave-one-out undefined for fewer than 2 rollouts")
    return RolloutGroup(box, w, h, preds), scheme, space, rloo


def handle_request(req: Any) -> dict:
    rid = req.get("id") if isinstance(req, dict) else None
    if rid is not None and not isinstance(rid, str):
        rid = str(rid)
    try:
        if not isinstance(req, dict):
            raise RequestError("request must be a JSON object")
        group, scheme, space, rloo = parse_request(req)
        rewards = score_group(group, scheme, space)
    except RequestError as exc:
        return {"id": rid, "error": str(exc)}
    out: dict = {"id": rid, "rewards": rewards}
    if rloo:
        out["advantages"] = rloo_advantages(rewards)
    return out


def handle_line(line: str) -> str:
    try:
        req = json.loads(line)
    except json.JSONDecodeError as exc:
        return json.dumps({"id": None, "error": f"invalid JSON: {exc.msg}"})
    return json.dumps(handle_request(req))


def serve_lines(lines: Iterable[str]) -> Iterator[str]:
    for line in lines:
        if line.strip():
            yield handle_line(line)


def serve_stdio(stdin: IO[str] = sys.stdin, stdout: IO[str] = sys.stdout) -> None:
    for resp in serve_lines(stdin):
        stdout.write(resp + "\n")
        stdout.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace")
            if not line.strip():
                continue
            self.wfile.write((handle_line(line) + "\n").encode("utf-8"))
            self.wfile.flush()


class RewardServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr: tuple[str, int]) -> None:
        super().__init__(addr, _Handler)


def parse_listen(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep:
        host, port = "127.0.0.1", addr
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise ValueError(f"bad listen address {addr!r}; expected host:port") from None
