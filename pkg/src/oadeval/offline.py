"""Per-slot average precision (AP) and calibrated AP over score tables.

These need the whole video's scores before they can be finalized, unlike
the streaming IA fold.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .timeline import COVERAGE_THRESHOLD, LabeledInterval, SlotGrid, class_coverage


def _ranked_hits(scores: np.ndarray, positives: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Stable sort on negated scores: ties keep input order.
    order = np.argsort(-scores, kind="stable")
    hit = positives[order]
    retrieved = scores[order] > 0
    tp = np.cumsum(hit, dtype=np.int64)
    fp = np.cumsum(~hit, dtype=np.int64)
    # Zero-score slots carry no detection and are never retrieved.
    at_positive = hit & retrieved
    return tp[at_positive], fp[at_positive]


def _as_arrays(scores, positives) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    if scores.shape != positives.shape or scores.ndim != 1:
        raise ValueError(f"scores {scores.shape} and labels {positives.shape} must be matching 1-d arrays")
    if scores.size == 0:
        raise ValueError("average precision needs at least one entry")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    return scores, positives


def average_precision(scores, positives) -> float:
    """Mean of precision@k over the ranks of the positive entries.

    Returns 0.0 when there are no positives. A positive whose score is 0 is
    treated as never retrieved and contributes zero precision.
    """
    scores, positives = _as_arrays(scores, positives)
    n_pos = int(positives.sum())
    if n_pos == 0:
        return 0.0
    tp, fp = _ranked_hits(scores, positives)
    return float(np.sum(tp / (tp + fp))) / n_pos


def calibrated_average_precision(scores, positives) -> float:
    """AP with precision replaced by w*TP / (w*TP + FP), w = negatives / positives."""
    scores, positives = _as_arrays(scores, positives)
    n_pos = int(positives.sum())
    if n_pos == 0:
        return 0.0
    w = (positives.size - n_pos) / n_pos
    tp, fp = _ranked_hits(scores, positives)
    wtp = w * tp
    with np.errstate(divide="ignore", invalid="ignore"):
        cprec = np.where(fp == 0, 1.0, wtp / (wtp + fp))
    return float(np.sum(cprec)) / n_pos


def mean_over_classes(per_class: Mapping[int, float]) -> float:
    if not per_class:
        raise ValueError("no action classes to average over")
    return sum(per_class.values()) / len(per_class)


@dataclass(frozen=True, eq=False)
class FrameScoreTable:
    """Per-slot class scores; column ``c`` holds class ``c``, column 0 is unused."""

    scores: np.ndarray
    gt_labels: np.ndarray

    def __post_init__(self) -> None:
        if self.scores.ndim != 2 or self.scores.shape[0] != self.gt_labels.shape[0]:
            raise ValueError(f"score table {self.scores.shape} does not match {self.gt_labels.shape[0]} slots")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")

    @property
    def num_classes(self) -> int:
        return self.scores.shape[1] - 1

    def truncated(self, slot_count: int) -> FrameScoreTable:
        return FrameScoreTable(self.scores[:slot_count], self.gt_labels[:slot_count])

    @classmethod
    def concatenate(cls, tables: Sequence[FrameScoreTable]) -> FrameScoreTable:
        if not tables:
            raise ValueError("nothing to concatenate")
        return cls(
            np.concatenate([t.scores for t in tables]),
            np.concatenate([t.gt_labels for t in tables]),
        )


def score_table(
    detections: Sequence[LabeledInterval], grid: SlotGrid, gt_labels: np.ndarray, num_classes: int
) -> FrameScoreTable:
    """Spread detection scores onto slots.

    A slot takes a class's score when that class covers at least half of
    it; slots without a detection score 0 for every class.
    """
    scores = np.zeros((grid.slot_count, num_classes + 1))
    for class_id, frac, class_scores, _ in class_coverage(detections, grid):
        if class_id > num_classes:
            raise ValueError(f"unknown class id {class_id}")
        covered = frac >= COVERAGE_THRESHOLD
        scores[covered, class_id] = class_scores[covered]
    return FrameScoreTable(scores, np.asarray(gt_labels))


def per_class_ap(table: FrameScoreTable, calibrated: bool = False) -> dict[int, float]:
    """AP per action class that has at least one positive slot."""
    metric = calibrated_average_precision if calibrated else average_precision
    result = {}
    for c in range(1, table.num_classes + 1):
        positives = table.gt_labels == c
        if positives.any():
            result[c] = metric(table.scores[:, c], positives)
    return result


def mean_ap(table: FrameScoreTable, calibrated: bool = False) -> float:
    return mean_over_classes(per_class_ap(table, calibrated))
