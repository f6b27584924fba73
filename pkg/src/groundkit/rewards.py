"""Reward schemes for pointing rollouts and leave-one-out advantages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

from .evaluation import CoordSpace, ParseError, parse_prediction
from .geometry import (
    BoundingBox,
    Point,
    max_distance,
    normalized_distance,
    point_in_box,
    unsigned_distance,
)


class RewardScheme(str, Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"
    BINARY = "binary"


# (lower bound inclusive, reward); first match scanning from the top wins
_DISCRETE_BANDS = (
    (0.5, 1.0),
    (0.1, 0.5),
    (0.0, 0.1),
    (-0.1, -0.1),
    (-0.5, -0.5),
)

SCHEME_MINIMUM = {
    RewardScheme.DISCRETE: -1.0,
    RewardScheme.CONTINUOUS: 0.0,
    RewardScheme.BINARY: 0.0,
}

_BELOW_ONE = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class Prediction:
    """One rollout: either a pixel point or the raw decoded text."""

    point: Optional[Point] = None
    raw_text: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.point is None) == (self.raw_text is None):
            raise ValueError("Prediction needs exactly one of point / raw_text")


@dataclass
class RolloutGroup:
    box: BoundingBox
    image_w: float
    image_h: float
    rollouts: list[Prediction]

    @property
    def n(self) -> int:
        return len(self.rollouts)


def discrete_reward(d_norm: float) -> float:
    if not -1.0 <= d_norm <= 1.0:
        raise ValueError(f"d_norm must lie in [-1, 1], got {d_norm}")
    for lower, reward in _DISCRETE_BANDS:
        if d_norm >= lower:
            return reward
    return -1.0


def continuous_reward(p: Point, b: BoundingBox, image_w: float, image_h: float) -> float:
    if point_in_box(p, b):
        return 1.0
    md = max_distance(b, image_w, image_h)
    if md <= 0.0:
        return 0.0
    d, _ = unsigned_distance(p, b)
    # a miss never earns the full hit reward, even when d/md rounds away
    return min(max(1.0 - d / md, 0.0), _BELOW_ONE)


def binary_reward(p: Point, b: BoundingBox) -> float:
    return 1.0 if point_in_box(p, b) else 0.0


def reward_for_point(
    p: Point, b: BoundingBox, image_w: float, image_h: float, scheme: RewardScheme
) -> float:
    if scheme is RewardScheme.DISCRETE:
        return discrete_reward(normalized_distance(p, b, image_w, image_h))
    if scheme is RewardScheme.CONTINUOUS:
        return continuous_reward(p, b, image_w, image_h)
    return binary_reward(p, b)


def score_group(
    g: RolloutGroup,
    scheme: Union[RewardScheme, str],
    coord_space: Union[CoordSpace, str, None] = None,
    pick: str = "last",
) -> list[float]:
    """Score every rollout in order; unparseable text gets the scheme minimum."""
    scheme = RewardScheme(scheme)
    if not g.rollouts:
        raise ValueError("rollout group is empty")
    # validate the box up front so a bad box fails even for an all-text group
    max_distance(g.box, g.image_w, g.image_h)
    rewards = []
    for pred in g.rollouts:
        p = pred.point
        if p is None:
            if coord_space is None:
                raise ValueError("coord_space is required to parse text rollouts")
            try:
                p = parse_prediction(pred.raw_text, coord_space, g.image_w, g.image_h, pick=pick)
            except ParseError:
                rewards.append(SCHEME_MINIMUM[scheme])
                continue
        rewards.append(reward_for_point(p, g.box, g.image_w, g.image_h, scheme))
    return rewards


def rloo_advantages(rewards: Sequence[float]) -> list[float]:
    """Each reward minus the mean reward of the other rollouts in its group."""
    n = len(rewards)
    if n < 2:
        raise ValueError("leave-one-out undefined for fewer than 2 rollouts")
    # R_i - (S - R_i)/(n-1) == n/(n-1) * (R_i - mean); the centred form keeps
    # the sum at zero and cancels constant shifts before scaling
    mean = math.fsum(rewards) / n
    scale = n / (n - 1)
    return [scale * (r - mean) for r in rewards]
