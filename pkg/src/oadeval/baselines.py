"""Reference detectors: never-act, oracle copy of the ground truth, and seeded noise."""

from __future__ import annotations

from collections.abc import Collection, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .timeline import LabeledInterval

MAX_RANDOM_LENGTH = 30.0


class BaselineKind(Enum):
    ALL_BACKGROUND = "all-bg"
    PERFECT_MODEL = "pm"
    UNIFORM_RANDOM = "random"


@dataclass(frozen=True)
class RandomBaselineParams:
    seed: int = 0
    detections_per_minute: float = 2.0

    def __post_init__(self) -> None:
        if not self.detections_per_minute > 0:
            raise ValueError(f"rate must be positive, got {self.detections_per_minute}")


def all_background(video_duration: float) -> list[LabeledInterval]:
    if not video_duration > 0:
        raise ValueError(f"duration must be positive, got {video_duration}")
    return []


def perfect_model(gt: Sequence[LabeledInterval]) -> list[LabeledInterval]:
    return [iv.with_score(1.0) for iv in gt]


def uniform_random(
    seed: int,
    video_duration: float,
    classes: Collection[int],
    rate: float,
    delta_t: float = 0.5,
) -> list[LabeledInterval]:
    """Poisson number of detections with uniform start, length, class and score.

    Lengths are drawn from [delta_t, 30 s] and clipped to the video end. The
    result is sorted by start time.
    """
    if not video_duration > 0:
        raise ValueError(f"duration must be positive, got {video_duration}")
    if not classes:
        raise ValueError("at least one action class is required")
    RandomBaselineParams(seed, rate)

    rng = np.random.default_rng(seed)
    count = int(rng.poisson(rate * video_duration / 60.0))
    starts = rng.uniform(0.0, video_duration, count)
    lengths = rng.uniform(delta_t, max(delta_t, MAX_RANDOM_LENGTH), count)
    class_ids = rng.choice(np.asarray(sorted(classes)), count)
    scores = rng.uniform(0.0, 1.0, count)

    out = []
    for s, length, c, score in zip(starts.tolist(), lengths.tolist(), class_ids.tolist(), scores.tolist()):
        end = min(s + length, video_duration)
        if end > s:
            out.append(LabeledInterval.make(s, end, c, score))
    out.sort(key=lambda iv: (iv.start, iv.end, iv.class_id))
    return out
