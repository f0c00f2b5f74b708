"""Synthetic untrimmed-video corpora for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .formats import ClassCatalog, GroundTruth, VideoMeta
from .timeline import LabeledInterval


def random_video_annotations(
    rng: np.random.Generator,
    duration: float,
    num_classes: int,
    mean_gap: float = 40.0,
    length_range: tuple[float, float] = (1.0, 20.0),
) -> list[LabeledInterval]:
    """Sparse, non-overlapping action segments separated by exponential gaps."""
    out = []
    t = float(rng.exponential(mean_gap))
    while t < duration:
        length = float(rng.uniform(*length_range))
        end = min(t + length, duration)
        if end > t:
            out.append(LabeledInterval.make(t, end, int(rng.integers(1, num_classes + 1))))
        t = end + float(rng.exponential(mean_gap))
    return out


def random_corpus(
    seed: int,
    n_videos: int,
    duration_range: tuple[float, float] = (10.0, 7200.0),
    num_classes: int = 5,
    mean_gap: float = 40.0,
) -> GroundTruth:
    rng = np.random.default_rng(seed)
    catalog = ClassCatalog(tuple(f"action{c}" for c in range(1, num_classes + 1)))
    videos = []
    annotations = {}
    for i in range(n_videos):
        duration = round(float(rng.uniform(*duration_range)), 3)
        meta = VideoMeta(f"video{i:04d}", duration)
        videos.append(meta)
        annotations[meta.video_id] = random_video_annotations(rng, duration, num_classes, mean_gap)
    return GroundTruth(catalog, tuple(videos), annotations)
