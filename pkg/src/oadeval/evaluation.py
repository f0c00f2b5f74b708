"""Corpus-level runs: IA series per video, maIA, and the offline comparison."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .formats import GroundTruth
from .offline import FrameScoreTable, mean_ap, score_table
from .online import DatasetSummary, EvaluatorConfig, MetricSeries, evaluate_video, maia
from .timeline import DenseLabeling, LabeledInterval, build_slot_grid, rasterize

Detections = Mapping[str, Sequence[LabeledInterval]]


def _map_ordered(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    # map() keeps input order, so outputs do not depend on the job count.
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def labelings(gt: GroundTruth, detections: Detections, video_id: str, delta_t: float) -> tuple[DenseLabeling, DenseLabeling]:
    grid = build_slot_grid(gt.video(video_id).duration, delta_t)
    classes = gt.catalog.ids
    return (
        rasterize(gt.intervals(video_id), grid, classes),
        rasterize(detections.get(video_id, ()), grid, classes),
    )


def _check_videos(gt: GroundTruth, detections: Detections) -> None:
    known = {v.video_id for v in gt.videos}
    unknown = sorted(set(detections) - known)
    if unknown:
        raise ValueError(f"detections reference unknown video {unknown[0]!r}")


def evaluate_corpus(
    gt: GroundTruth, detections: Detections, config: EvaluatorConfig, jobs: int = 1
) -> tuple[list[MetricSeries], DatasetSummary]:
    if not gt.videos:
        raise ValueError("ground truth declares no videos")
    _check_videos(gt, detections)

    def one(video_id: str) -> MetricSeries:
        gt_lab, pred_lab = labelings(gt, detections, video_id, config.delta_t)
        return evaluate_video(gt_lab, pred_lab, config, video_id)

    series = _map_ordered(one, [v.video_id for v in gt.videos], jobs)
    return series, maia(series)


def corpus_score_table(gt: GroundTruth, detections: Detections, delta_t: float) -> FrameScoreTable:
    """Slot-level score table for the whole corpus, videos concatenated in file order."""
    _check_videos(gt, detections)
    tables = []
    for v in gt.videos:
        grid = build_slot_grid(v.duration, delta_t)
        gt_lab = rasterize(gt.intervals(v.video_id), grid, gt.catalog.ids)
        tables.append(score_table(detections.get(v.video_id, ()), grid, gt_lab.labels, len(gt.catalog)))
    return FrameScoreTable.concatenate(tables)


@dataclass(frozen=True)
class DetectorReport:
    name: str
    map: float
    cap: float
    maia: float
    weighted_maia: float


def _mean_or_nan(table: FrameScoreTable, calibrated: bool) -> float:
    try:
        return mean_ap(table, calibrated)
    except ValueError:
        return math.nan


def compare_detectors(
    gt: GroundTruth,
    detectors: Sequence[tuple[str, Detections]],
    config: EvaluatorConfig,
    jobs: int = 1,
) -> list[DetectorReport]:
    reports = []
    for name, detections in detectors:
        _, summary = evaluate_corpus(gt, detections, config, jobs)
        table = corpus_score_table(gt, detections, config.delta_t)
        reports.append(
            DetectorReport(
                name,
                _mean_or_nan(table, calibrated=False),
                _mean_or_nan(table, calibrated=True),
                summary.maia,
                summary.weighted_maia,
            )
        )
    return reports


COMPARISON_HEADER = "detector,mAP,cAP,maIA,weighted_maIA\n"


def write_comparison(reports: Sequence[DetectorReport]) -> str:
    """Percentages with four decimals, one row per detector in input order."""
    rows = [COMPARISON_HEADER]
    for r in reports:
        rows.append(
            f"{r.name},{100 * r.map:.4f},{100 * r.cap:.4f},{100 * r.maia:.4f},{100 * r.weighted_maia:.4f}\n"
        )
    return "".join(rows)
