import math

import numpy as np
import pytest

from oadeval.baselines import uniform_random
from oadeval.formats import DetectionEvent, VideoMeta, detections_to_events
from oadeval.online import EvaluatorConfig, evaluate_video
from oadeval.streaming import LateRevisionError, VideoStream
from oadeval.synthetic import random_video_annotations
from oadeval.timeline import LabeledInterval, build_slot_grid, rasterize


def batch(meta, gt, dets, delta_t):
    grid = build_slot_grid(meta.duration, delta_t)
    return evaluate_video(rasterize(gt, grid), rasterize(dets, grid), EvaluatorConfig(delta_t), meta.video_id)


def replay(meta, gt, dets, delta_t, latency):
    stream = VideoStream(meta, gt, delta_t, latency=latency)
    points, emitted_before_end = [], 0
    for event in detections_to_events({meta.video_id: dets}):
        points += stream.push(event)
    emitted_before_end = len(points)
    points += stream.finish()
    return points, emitted_before_end


def test_worked_example_live():
    meta = VideoMeta("v1", 10.0)
    gt = [LabeledInterval.make(3, 7, 1)]
    stream = VideoStream(meta, gt, 1.0, latency=0.0)
    pts = stream.push(DetectionEvent("v1", LabeledInterval.make(4, 8, 1, 0.9), 8.0))
    assert [p.t_prime for p in pts] == [float(k) for k in range(1, 9)]
    assert pts[4].ia == pytest.approx(0.8)
    rest = stream.finish()
    assert [p.t_prime for p in rest] == [9.0, 10.0]
    assert rest[-1].weighted_ia == pytest.approx(9.5 / 12, abs=1e-12)


def test_empty_stream_all_background():
    stream = VideoStream(VideoMeta("v", 10.0), [], 1.0)
    pts = stream.finish()
    assert len(pts) == 10 and all(p.ia == 1.0 for p in pts)


def test_late_revision_rejected():
    stream = VideoStream(VideoMeta("v", 20.0), [], 1.0, latency=2.0)
    stream.push(DetectionEvent("v", LabeledInterval.make(8, 10, 1, 0.5), 10.0))
    assert stream.scored_slots == 8
    with pytest.raises(LateRevisionError):
        stream.push(DetectionEvent("v", LabeledInterval.make(7.5, 11, 1, 0.5), 11.0))
    # Starting exactly on the scored boundary is fine.
    stream.push(DetectionEvent("v", LabeledInterval.make(8.0, 11, 1, 0.5), 11.0))


def test_advance_clock_without_events():
    stream = VideoStream(VideoMeta("v", 10.0), [], 0.5, latency=1.0)
    assert stream.advance_clock(0.9) == []
    assert len(stream.advance_clock(3.0)) == 4


@pytest.mark.parametrize("seed", range(20))
def test_stream_equals_batch(seed):
    rng = np.random.default_rng(seed)
    delta_t = float(rng.choice([0.1, 0.5, 2.0]))
    meta = VideoMeta("v", round(float(rng.uniform(20, 900)), 3))
    gt = random_video_annotations(rng, meta.duration, 3, mean_gap=20.0)
    dets = uniform_random(seed, meta.duration, {1, 2, 3}, 6.0, delta_t)
    latency = max((d.end - d.start for d in dets), default=0.0)
    points, live = replay(meta, gt, dets, delta_t, latency)
    series = batch(meta, gt, dets, delta_t)
    assert [p.t_prime for p in points] == series.t_prime.tolist()
    assert [p.ia for p in points] == series.ia.tolist()
    assert [p.weighted_ia for p in points] == series.weighted_ia.tolist()
    if dets and dets[-1].end + latency < meta.duration - 10 * delta_t:
        assert live > 0


def test_infinite_latency_waits_for_end():
    meta = VideoMeta("v", 10.0)
    dets = [LabeledInterval.make(1, 9, 1, 0.5)]
    points, live = replay(meta, [], dets, 1.0, math.inf)
    assert live == 0 and len(points) == 10
