"""Instantaneous Accuracy as a streaming fold over slot outcomes.

The fold keeps only integer counters, so the value after ``k`` slots is
bit-identical whether the outcomes arrive one at a time or in chunks.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from .timeline import DenseLabeling, SlotOutcome, classify_slots

DEFAULT_DELTA_T = 0.5
DEFAULT_CHUNK = 1 << 16


class UndefinedMetricError(ValueError):
    """IA was requested before a single full slot elapsed."""


@dataclass(frozen=True)
class EvaluatorConfig:
    delta_t: float = DEFAULT_DELTA_T
    weighted: bool = True

    def __post_init__(self) -> None:
        if not self.delta_t > 0:
            raise ValueError(f"delta_t must be positive, got {self.delta_t}")


@dataclass(frozen=True)
class EvaluatorState:
    slots_seen: int = 0
    tp_sum: int = 0
    tn_sum: int = 0
    gt_action_slots: int = 0
    gt_background_slots: int = 0


def advance(state: EvaluatorState, outcome: SlotOutcome) -> EvaluatorState:
    outcome = SlotOutcome(outcome)
    action = outcome in (SlotOutcome.TP, SlotOutcome.FN)
    return EvaluatorState(
        slots_seen=state.slots_seen + 1,
        tp_sum=state.tp_sum + (outcome is SlotOutcome.TP),
        tn_sum=state.tn_sum + (outcome is SlotOutcome.TN),
        gt_action_slots=state.gt_action_slots + action,
        gt_background_slots=state.gt_background_slots + (not action),
    )


def ia_at(state: EvaluatorState) -> float:
    if state.slots_seen == 0:
        raise UndefinedMetricError("IA is undefined before the first full slot")
    return (state.tp_sum + state.tn_sum) / state.slots_seen


def weighted_ia_at(state: EvaluatorState) -> float:
    """Accuracy with true positives scaled by the background/action ratio.

    With w = bg / action the renormalized form (w*tp + tn) / (w*action + bg)
    simplifies to the mean of the action and background recalls, which is
    how it is evaluated here. Falls back to plain IA when either ground
    truth count is zero or the two are equal (w = 1).
    """
    ga, gb = state.gt_action_slots, state.gt_background_slots
    if ga == 0 or gb == 0 or ga == gb:
        return ia_at(state)
    return 0.5 * (state.tp_sum / ga + state.tn_sum / gb)


@dataclass(frozen=True)
class FoldChunk:
    """IA values for a run of consecutive slots."""

    slots_seen: np.ndarray
    ia: np.ndarray
    weighted_ia: np.ndarray


def advance_many(state: EvaluatorState, outcomes: np.ndarray) -> tuple[EvaluatorState, FoldChunk]:
    """Fold a chunk of outcome codes, returning the new state and per-slot IA."""
    outcomes = np.asarray(outcomes)
    n = outcomes.shape[0]
    if n == 0:
        empty = np.empty(0)
        return state, FoldChunk(np.empty(0, dtype=np.int64), empty, empty)

    is_tp = outcomes == SlotOutcome.TP
    is_tn = outcomes == SlotOutcome.TN
    is_action = is_tp | (outcomes == SlotOutcome.FN)

    k = np.arange(state.slots_seen + 1, state.slots_seen + n + 1, dtype=np.int64)
    tp = np.cumsum(is_tp, dtype=np.int64) + state.tp_sum
    tn = np.cumsum(is_tn, dtype=np.int64) + state.tn_sum
    ga = np.cumsum(is_action, dtype=np.int64) + state.gt_action_slots
    gb = k - ga

    ia = (tp + tn) / k
    balanced = ga.astype(bool) & gb.astype(bool) & (ga != gb)
    with np.errstate(divide="ignore", invalid="ignore"):
        wia = np.where(balanced, 0.5 * (tp / ga + tn / gb), ia)

    new_state = EvaluatorState(
        slots_seen=int(k[-1]),
        tp_sum=int(tp[-1]),
        tn_sum=int(tn[-1]),
        gt_action_slots=int(ga[-1]),
        gt_background_slots=int(gb[-1]),
    )
    return new_state, FoldChunk(k, ia, wia)


@dataclass(frozen=True)
class MetricPoint:
    t_prime: float
    ia: float
    weighted_ia: float


@dataclass(frozen=True, eq=False)
class MetricSeries:
    """IA sampled at t' = delta_t, 2*delta_t, ... for one video.

    Values are held as arrays; :attr:`points` materializes MetricPoint rows.
    """

    video_id: str
    config: EvaluatorConfig
    video_duration: float
    ia: np.ndarray
    weighted_ia: np.ndarray

    def __post_init__(self) -> None:
        if self.ia.shape != self.weighted_ia.shape:
            raise ValueError("ia and weighted_ia lengths differ")
        if self.t_prime.size and self.t_prime[-1] > self.video_duration * (1 + 1e-12):
            raise ValueError("series extends beyond the video duration")

    def __len__(self) -> int:
        return self.ia.shape[0]

    @property
    def t_prime(self) -> np.ndarray:
        return np.arange(1, len(self) + 1) * self.config.delta_t

    @property
    def points(self) -> list[MetricPoint]:
        return [
            MetricPoint(float(t), float(a), float(w))
            for t, a, w in zip(self.t_prime, self.ia, self.weighted_ia)
        ]

    def average_ia(self) -> float:
        return float(np.sum(self.ia)) / len(self)

    def average_weighted_ia(self) -> float:
        return float(np.sum(self.weighted_ia)) / len(self)


def _check_same_grid(gt: DenseLabeling, pred: DenseLabeling) -> None:
    if gt.grid != pred.grid:
        raise ValueError(f"grid mismatch: {gt.grid} vs {pred.grid}")


def iter_fold(
    gt: DenseLabeling, pred: DenseLabeling, chunk_size: int = DEFAULT_CHUNK
) -> Iterator[FoldChunk]:
    """Fold a video chunk by chunk; memory is bounded by ``chunk_size``."""
    _check_same_grid(gt, pred)
    state = EvaluatorState()
    n = gt.grid.slot_count
    for lo in range(0, n, chunk_size):
        hi = min(lo + chunk_size, n)
        state, chunk = advance_many(state, classify_slots(gt.labels[lo:hi], pred.labels[lo:hi]))
        yield chunk


def evaluate_video(
    gt: DenseLabeling,
    pred: DenseLabeling,
    config: EvaluatorConfig | None = None,
    video_id: str = "",
) -> MetricSeries:
    config = config or EvaluatorConfig(delta_t=gt.grid.delta_t)
    _check_same_grid(gt, pred)
    if config.delta_t != gt.grid.delta_t:
        raise ValueError(f"config delta_t={config.delta_t} differs from grid delta_t={gt.grid.delta_t}")
    (chunk,) = iter_fold(gt, pred, chunk_size=gt.grid.slot_count)
    return MetricSeries(video_id, config, gt.grid.duration, chunk.ia, chunk.weighted_ia)


@dataclass(frozen=True)
class VideoAverage:
    video_id: str
    average_ia: float
    average_weighted_ia: float
    slot_count: int


def average_video(
    gt: DenseLabeling, pred: DenseLabeling, video_id: str = "", chunk_size: int = DEFAULT_CHUNK
) -> VideoAverage:
    """Time-averaged IA of one video without materializing its series."""
    ia_sum = 0.0
    wia_sum = 0.0
    for chunk in iter_fold(gt, pred, chunk_size):
        ia_sum += float(np.sum(chunk.ia))
        wia_sum += float(np.sum(chunk.weighted_ia))
    n = gt.grid.slot_count
    return VideoAverage(video_id, ia_sum / n, wia_sum / n, n)


@dataclass(frozen=True)
class DatasetSummary:
    per_video_average: dict[str, float]
    per_video_weighted_average: dict[str, float]
    maia: float
    weighted_maia: float
    video_count: int = field(default=0)


def summarize(averages: Sequence[VideoAverage]) -> DatasetSummary:
    if not averages:
        raise ValueError("cannot summarize an empty corpus")
    per_video = {a.video_id: a.average_ia for a in averages}
    per_video_w = {a.video_id: a.average_weighted_ia for a in averages}
    if len(per_video) != len(averages):
        raise ValueError("duplicate video ids in corpus")
    n = len(averages)
    return DatasetSummary(
        per_video_average=per_video,
        per_video_weighted_average=per_video_w,
        maia=sum(a.average_ia for a in averages) / n,
        weighted_maia=sum(a.average_weighted_ia for a in averages) / n,
        video_count=n,
    )


def maia(series: Sequence[MetricSeries]) -> DatasetSummary:
    """Mean over videos of each video's time-averaged IA.

    A video's average is (delta_t / T) * sum of IA over its evaluation
    instants with T the evaluable duration, i.e. the mean of its points.
    """
    if not series:
        raise ValueError("maIA needs at least one video")
    averages = []
    for s in series:
        if len(s) == 0:
            raise ValueError(f"video {s.video_id!r} has no evaluation instants")
        averages.append(VideoAverage(s.video_id, s.average_ia(), s.average_weighted_ia(), len(s)))
    return summarize(averages)
