"""Slot grids, interval annotations and their dense per-slot rasterization."""

from __future__ import annotations

import math
from collections.abc import Collection, Iterable, Iterator, Sequence
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

BACKGROUND = 0

# Overlap fractions are rounded to this many decimals before comparison so
# that slot boundaries computed as k * delta_t do not flip ties or the
# coverage threshold through float noise.
_FRACTION_DECIMALS = 9
COVERAGE_THRESHOLD = 0.5


@dataclass(frozen=True)
class TimeInterval:
    start: float
    end: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError(f"interval bounds must be finite, got [{self.start}, {self.end})")
        if self.start < 0:
            raise ValueError(f"interval start must be >= 0, got {self.start}")
        if self.end <= self.start:
            raise ValueError(f"end before start: [{self.start}, {self.end})")

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class LabeledInterval:
    """An action span. ``score`` is None for ground truth."""

    interval: TimeInterval
    class_id: int
    score: float | None = None

    def __post_init__(self) -> None:
        if self.class_id == BACKGROUND:
            raise ValueError("class id 0 is reserved for background")
        if self.class_id < 0:
            raise ValueError(f"class id must be >= 1, got {self.class_id}")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")

    @classmethod
    def make(cls, start: float, end: float, class_id: int, score: float | None = None) -> LabeledInterval:
        return cls(TimeInterval(float(start), float(end)), int(class_id), score)

    @property
    def start(self) -> float:
        return self.interval.start

    @property
    def end(self) -> float:
        return self.interval.end

    def with_score(self, score: float | None) -> LabeledInterval:
        return LabeledInterval(self.interval, self.class_id, score)


@dataclass(frozen=True)
class SlotGrid:
    delta_t: float
    duration: float
    slot_count: int

    def slot_bounds(self, k: int) -> tuple[float, float]:
        return k * self.delta_t, (k + 1) * self.delta_t

    @property
    def evaluable_duration(self) -> float:
        return self.slot_count * self.delta_t


def build_slot_grid(duration: float, delta_t: float) -> SlotGrid:
    if not (math.isfinite(duration) and duration > 0):
        raise ValueError(f"duration must be positive, got {duration}")
    if not (math.isfinite(delta_t) and delta_t > 0):
        raise ValueError(f"delta_t must be positive, got {delta_t}")
    if delta_t > duration:
        raise ValueError(f"delta_t={delta_t} exceeds duration={duration}: no full slot fits")
    # Guard against 0.3 / 0.1 == 2.9999999999999996.
    slot_count = math.floor(duration / delta_t + 1e-9)
    if slot_count * delta_t > duration * (1 + 1e-12):
        slot_count -= 1
    return SlotGrid(float(delta_t), float(duration), int(slot_count))


@dataclass(frozen=True, eq=False)
class DenseLabeling:
    grid: SlotGrid
    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int32)
        if labels.ndim != 1 or labels.shape[0] != self.grid.slot_count:
            raise ValueError(
                f"labeling has {labels.shape} labels for a grid of {self.grid.slot_count} slots"
            )
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be 0 (background) or a class id >= 1")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DenseLabeling):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.labels, other.labels)

    def __len__(self) -> int:
        return self.grid.slot_count

    def to_intervals(self) -> list[LabeledInterval]:
        """Slot-aligned action runs, one interval per maximal run of a class."""
        labels = self.labels
        if labels.size == 0:
            return []
        change = np.flatnonzero(np.diff(labels)) + 1
        starts = np.concatenate(([0], change))
        ends = np.concatenate((change, [labels.size]))
        dt = self.grid.delta_t
        return [
            LabeledInterval.make(s * dt, e * dt, int(labels[s]))
            for s, e in zip(starts, ends)
            if labels[s] != BACKGROUND
        ]


class SlotOutcome(IntEnum):
    TP = 0
    TN = 1
    FP = 2
    FN = 3


def classify_slot(gt_label: int, pred_label: int) -> SlotOutcome:
    if gt_label != BACKGROUND:
        return SlotOutcome.TP if pred_label == gt_label else SlotOutcome.FN
    return SlotOutcome.TN if pred_label == BACKGROUND else SlotOutcome.FP


def classify_slots(gt_labels: np.ndarray, pred_labels: np.ndarray) -> np.ndarray:
    """Vectorized :func:`classify_slot`; returns int8 outcome codes."""
    gt_labels = np.asarray(gt_labels)
    pred_labels = np.asarray(pred_labels)
    if gt_labels.shape != pred_labels.shape:
        raise ValueError(f"shape mismatch: {gt_labels.shape} vs {pred_labels.shape}")
    action = gt_labels != BACKGROUND
    match = gt_labels == pred_labels
    out = np.where(
        action,
        np.where(match, SlotOutcome.TP, SlotOutcome.FN),
        np.where(match, SlotOutcome.TN, SlotOutcome.FP),
    )
    return out.astype(np.int8)


def merge_same_class(intervals: Iterable[LabeledInterval]) -> dict[int, list[tuple[float, float]]]:
    """Union overlapping or touching intervals, per class, as sorted disjoint spans."""
    by_class: dict[int, list[tuple[float, float]]] = {}
    for iv in intervals:
        by_class.setdefault(iv.class_id, []).append((iv.start, iv.end))
    merged: dict[int, list[tuple[float, float]]] = {}
    for class_id in sorted(by_class):
        spans: list[tuple[float, float]] = []
        for start, end in sorted(by_class[class_id]):
            if spans and start <= spans[-1][1]:
                if end > spans[-1][1]:
                    spans[-1] = (spans[-1][0], end)
            else:
                spans.append((start, end))
        merged[class_id] = spans
    return merged


def _check_intervals(
    intervals: Sequence[LabeledInterval], grid: SlotGrid, classes: Collection[int] | None
) -> None:
    for iv in intervals:
        if classes is not None and iv.class_id not in classes:
            raise ValueError(f"unknown class id {iv.class_id}")
        if iv.start > grid.duration:
            raise ValueError(f"interval starts at {iv.start}, beyond duration {grid.duration}")


def _fraction(start: float, end: float, k: int, dt: float) -> float:
    overlap = min(end, (k + 1) * dt) - max(start, k * dt)
    return round(overlap / dt, _FRACTION_DECIMALS) if overlap > 0 else 0.0


def _touched(start: float, end: float, grid: SlotGrid) -> tuple[int, int]:
    """Half-open slot range overlapping [start, end) by a non-vanishing fraction."""
    dt = grid.delta_t
    end = min(end, grid.duration)
    lo = max(0, math.floor(start / dt) - 1)
    hi = min(grid.slot_count, math.ceil(end / dt) + 1)
    while lo < hi and _fraction(start, end, lo, dt) <= 0:
        lo += 1
    while hi > lo and _fraction(start, end, hi - 1, dt) <= 0:
        hi -= 1
    return lo, hi


def class_coverage(
    intervals: Sequence[LabeledInterval], grid: SlotGrid
) -> Iterator[tuple[int, np.ndarray, np.ndarray, np.ndarray]]:
    """Per class: covered fraction, best touching score and earliest touching start per slot.

    Coverage is the measure of the union of the class's intervals within
    the slot. Slots the class never touches have score -inf and start +inf.
    Ground truth (no score) counts as score 1.0.
    """
    n, dt = grid.slot_count, grid.delta_t
    by_class: dict[int, list[LabeledInterval]] = {}
    for iv in intervals:
        by_class.setdefault(iv.class_id, []).append(iv)
    for class_id, spans in merge_same_class(intervals).items():
        cov = np.zeros(n)
        first = np.full(n, np.inf)
        # Later assignments win, so walk spans backwards to keep the earliest start.
        for start, end in reversed(spans):
            end = min(end, grid.duration)
            lo, hi = _touched(start, end, grid)
            if hi <= lo:
                continue
            first[lo:hi] = start
            # Interior slots lie wholly inside the span; only the ends are partial.
            if hi - lo > 2:
                cov[lo + 1 : hi - 1] = 1.0
            cov[lo] += _fraction(start, end, lo, dt)
            if hi - 1 > lo:
                cov[hi - 1] += _fraction(start, end, hi - 1, dt)
        score = np.full(n, -np.inf)
        for iv in sorted(by_class[class_id], key=lambda iv: 1.0 if iv.score is None else iv.score):
            lo, hi = _touched(iv.start, iv.end, grid)
            score[lo:hi] = 1.0 if iv.score is None else iv.score
        yield class_id, np.round(cov, _FRACTION_DECIMALS), score, first


def rasterize(
    intervals: Sequence[LabeledInterval],
    grid: SlotGrid,
    classes: Collection[int] | None = None,
) -> DenseLabeling:
    """Assign each slot the class covering at least half of it.

    Competing classes are ranked by covered fraction, then score, then
    earlier start, then smaller class id. Intervals running past the grid
    duration are clipped.
    """
    _check_intervals(intervals, grid, classes)
    n = grid.slot_count
    labels = np.zeros(n, dtype=np.int32)
    if not intervals:
        return DenseLabeling(grid, labels)

    best_frac = np.zeros(n)
    best_score = np.full(n, -np.inf)
    best_start = np.full(n, np.inf)

    # Classes arrive in increasing id order, so an exact tie on every key
    # keeps the smaller id already stored.
    for class_id, frac, score, start in class_coverage(intervals, grid):
        idx = np.flatnonzero(frac >= COVERAGE_THRESHOLD)
        if idx.size == 0:
            continue
        f, s, st = frac[idx], score[idx], start[idx]
        bf, bs, bst = best_frac[idx], best_score[idx], best_start[idx]
        better = f > bf
        tie = f == bf
        better |= tie & (s > bs)
        tie &= s == bs
        better |= tie & (st < bst)
        win = idx[better]
        best_frac[win] = f[better]
        best_score[win] = s[better]
        best_start[win] = st[better]
        labels[win] = class_id

    return DenseLabeling(grid, labels)


def clip_interval(iv: LabeledInterval, duration: float) -> LabeledInterval | None:
    if iv.start >= duration:
        return None
    if iv.end <= duration:
        return iv
    return LabeledInterval(TimeInterval(iv.start, duration), iv.class_id, iv.score)
