"""Live IA over a detection event stream.

A slot is scored once the video's emit clock has passed the slot end by
``latency`` seconds. Events that would change an already scored slot are
rejected, which keeps every emitted value equal to the batch result.
"""

from __future__ import annotations

import math
from collections.abc import Collection, Sequence

from .formats import DetectionEvent, StreamError, VideoMeta
from .online import EvaluatorState, MetricPoint, advance_many
from .timeline import LabeledInterval, build_slot_grid, classify_slots, rasterize

DEFAULT_LATENCY = 30.0


class LateRevisionError(StreamError):
    pass


class VideoStream:
    def __init__(
        self,
        meta: VideoMeta,
        gt_intervals: Sequence[LabeledInterval],
        delta_t: float,
        classes: Collection[int] | None = None,
        latency: float = DEFAULT_LATENCY,
    ):
        if not latency >= 0:
            raise ValueError(f"latency must be >= 0, got {latency}")
        self.meta = meta
        self.grid = build_slot_grid(meta.duration, delta_t)
        self.classes = classes
        self.latency = latency
        self.gt = rasterize(gt_intervals, self.grid, classes)
        self.detections: list[LabeledInterval] = []
        self.state = EvaluatorState()
        self.watermark = 0.0

    @property
    def scored_slots(self) -> int:
        return self.state.slots_seen

    def push(self, event: DetectionEvent) -> list[MetricPoint]:
        if event.video_id != self.meta.video_id:
            raise ValueError(f"event for {event.video_id!r} pushed to stream of {self.meta.video_id!r}")
        first_slot = math.floor(event.detection.start / self.grid.delta_t + 1e-9)
        if first_slot < self.scored_slots:
            raise LateRevisionError(
                f"detection starting at {event.detection.start} revises slot {first_slot}, "
                f"already scored (latency {self.latency} s)"
            )
        self.detections.append(event.detection)
        self.watermark = max(self.watermark, event.emit_time)
        return self.advance_clock(self.watermark)

    def advance_clock(self, now: float) -> list[MetricPoint]:
        """Score every slot that ended at least ``latency`` seconds before ``now``."""
        self.watermark = max(self.watermark, now)
        horizon = self.watermark - self.latency
        if horizon < self.grid.delta_t:
            return []
        final = min(self.grid.slot_count, math.floor(horizon / self.grid.delta_t + 1e-9))
        return self._score_until(final)

    def finish(self) -> list[MetricPoint]:
        return self._score_until(self.grid.slot_count)

    def _score_until(self, final: int) -> list[MetricPoint]:
        lo = self.scored_slots
        if final <= lo:
            return []
        pred = rasterize(self.detections, self.grid, self.classes)
        outcomes = classify_slots(self.gt.labels[lo:final], pred.labels[lo:final])
        self.state, chunk = advance_many(self.state, outcomes)
        t_prime = chunk.slots_seen * self.grid.delta_t
        return [
            MetricPoint(t, a, w)
            for t, a, w in zip(t_prime.tolist(), chunk.ia.tolist(), chunk.weighted_ia.tolist())
        ]
