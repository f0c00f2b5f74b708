import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oadeval.formats import (
    CausalityError,
    ClassCatalog,
    DetectionEvent,
    GroundTruth,
    ParseError,
    StreamOrderError,
    VideoMeta,
    detections_to_events,
    parse_detections,
    parse_ground_truth,
    read_event_stream,
    write_detections,
    write_event_stream,
    write_ground_truth,
    write_metric_series,
    write_summary,
)
from oadeval.online import EvaluatorConfig, MetricSeries, evaluate_video, maia
from oadeval.timeline import LabeledInterval, build_slot_grid, rasterize

MINIMAL = "[videos]\nv1,600.0\n[annotations]\nv1,Run,3.0,7.0\n"


def gt_with(rows, videos="v1,600.0"):
    return f"[classes]\nRun\nJump\n[videos]\n{videos}\n[annotations]\n{rows}\n"


class TestGroundTruth:
    def test_minimal(self):
        gt = parse_ground_truth(MINIMAL)
        assert gt.videos == (VideoMeta("v1", 600.0),)
        assert gt.catalog.names == ("Run",)
        (iv,) = gt.intervals("v1")
        assert (iv.start, iv.end, iv.class_id, iv.score) == (3.0, 7.0, 1, None)

    def test_inverted(self):
        with pytest.raises(ParseError, match="end before start, line 7"):
            parse_ground_truth(gt_with("v1,Run,7.0,3.0"))

    def test_unknown_video(self):
        with pytest.raises(ParseError, match="unknown video"):
            parse_ground_truth(gt_with("v9,Run,3.0,7.0"))

    def test_unknown_class(self):
        with pytest.raises(ParseError, match="unknown class"):
            parse_ground_truth(gt_with("v1,Swim,3.0,7.0"))

    def test_beyond_duration(self):
        with pytest.raises(ParseError, match="beyond duration"):
            parse_ground_truth(gt_with("v1,Run,3.0,700.0"))

    @pytest.mark.parametrize("row", ["v1,Run,3.0", "v1,Run,a,7.0", "v1,Run,nan,7.0", "v1,Run,3,3", "v1,Run,-1,2"])
    def test_malformed(self, row):
        with pytest.raises(ParseError, match="line 7"):
            parse_ground_truth(gt_with(row))

    def test_comma_decimal_rejected(self):
        with pytest.raises(ParseError):
            parse_ground_truth(gt_with("v1,Run,3,5,7,0"))

    def test_row_outside_section(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_ground_truth("v1,600.0\n")

    def test_duplicate_video(self):
        with pytest.raises(ParseError, match="duplicate video"):
            parse_ground_truth(gt_with("", videos="v1,5\nv1,6"))

    def test_comments_and_blank_lines(self):
        gt = parse_ground_truth("# header\n\n[videos]\nv1,10 # ten seconds\n[annotations]\n\nv1,A,1,2\n")
        assert len(gt.intervals("v1")) == 1

    def test_overlapping_same_class_allowed(self):
        gt = parse_ground_truth(gt_with("v1,Run,1,5\nv1,Run,3,8"))
        assert len(gt.intervals("v1")) == 2

    def test_catalog_follows_first_appearance(self):
        gt = parse_ground_truth("[videos]\nv,9\n[annotations]\nv,B,0,1\nv,A,1,2\nv,B,2,3\n")
        assert gt.catalog.names == ("B", "A")


class TestDetections:
    def catalog(self):
        return ClassCatalog(("Run",))

    def test_single(self):
        dets = parse_detections("v1,Run,4.0,8.0,0.9", self.catalog(), [VideoMeta("v1", 10.0)])
        (d,) = dets["v1"]
        assert (d.start, d.end, d.class_id, d.score) == (4.0, 8.0, 1, 0.9)

    def test_score_out_of_range(self):
        with pytest.raises(ParseError, match="outside"):
            parse_detections("v1,Run,4.0,8.0,1.7", self.catalog())

    def test_empty_file(self):
        assert parse_detections("", self.catalog()) == {}
        assert parse_detections("[detections]\n", self.catalog()) == {}

    def test_unknown_class(self):
        with pytest.raises(ParseError, match="unknown class"):
            parse_detections("v1,Walk,4.0,8.0,0.9", self.catalog())

    def test_unknown_video(self):
        with pytest.raises(ParseError, match="unknown video"):
            parse_detections("v2,Run,4.0,8.0,0.9", self.catalog(), [VideoMeta("v1", 10.0)])


class TestEventStream:
    cat = ClassCatalog(("Run",))

    def test_accepts_causal(self):
        (e,) = read_event_stream(["v1,Run,4.0,8.0,0.9,8.0"], self.cat)
        assert e.emit_time == 8.0 and e.detection.end == 8.0

    def test_future_end(self):
        with pytest.raises(CausalityError):
            list(read_event_stream(["v1,Run,4.0,8.0,0.9,5.0"], self.cat))

    def test_order(self):
        lines = ["v1,Run,1.0,2.0,0.9,5.0", "v1,Run,1.0,2.0,0.9,4.0"]
        with pytest.raises(StreamOrderError, match="line 2"):
            list(read_event_stream(lines, self.cat))

    def test_order_is_per_video(self):
        lines = ["v1,Run,1.0,2.0,0.9,5.0", "v2,Run,1.0,2.0,0.9,4.0"]
        assert len(list(read_event_stream(lines, self.cat))) == 2

    def test_lazy_errors(self):
        it = read_event_stream(["v1,Run,1.0,2.0,0.9,5.0", "v1,Run,1.0,9.0,0.9,6.0"], self.cat)
        assert next(it).emit_time == 5.0
        with pytest.raises(CausalityError):
            next(it)

    def test_replay_round_trip(self):
        dets = {"v1": [LabeledInterval.make(4, 8, 1, 0.5), LabeledInterval.make(1, 3, 1, 0.25)]}
        events = detections_to_events(dets)
        assert [e.emit_time for e in events] == [3.0, 8.0]
        parsed = list(read_event_stream(write_event_stream(events, self.cat).splitlines(), self.cat))
        assert parsed == events


def test_replay_and_batch_rasterize_identically():
    cat = ClassCatalog(("a", "b"))
    dets = {"v": [LabeledInterval.make(0.3, 4.1, 1, 0.7), LabeledInterval.make(3.9, 9.0, 2, 0.8), LabeledInterval.make(2.0, 2.6, 2, 0.1)]}
    batch = parse_detections(write_detections(dets, cat), cat)
    streamed = [e.detection for e in read_event_stream(write_event_stream(detections_to_events(dets), cat).splitlines(), cat)]
    grid = build_slot_grid(10.0, 0.5)
    assert rasterize(streamed, grid) == rasterize(batch["v"], grid)


times = st.floats(0.0, 1e5, allow_nan=False, allow_infinity=False)


@st.composite
def corpora(draw):
    names = tuple(draw(st.lists(st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,8}", fullmatch=True), min_size=1, max_size=4, unique=True)))
    videos, ann = [], {}
    for i in range(draw(st.integers(1, 3))):
        duration = draw(st.floats(1.0, 1e5))
        vid = f"vid{i}"
        videos.append(VideoMeta(vid, duration))
        ivs = []
        for _ in range(draw(st.integers(0, 4))):
            a = draw(st.floats(0.0, duration, exclude_max=True))
            b = draw(st.floats(a, duration, exclude_min=True))
            ivs.append(LabeledInterval.make(a, b, draw(st.integers(1, len(names)))))
        ann[vid] = ivs
    return GroundTruth(ClassCatalog(names), tuple(videos), ann)


@settings(max_examples=150, deadline=None)
@given(corpora(), st.floats(0.0, 1.0))
def test_round_trip_lossless(gt, score):
    text = write_ground_truth(gt)
    back = parse_ground_truth(text)
    assert back == gt
    assert write_ground_truth(back) == text

    dets = {v.video_id: [iv.with_score(score) for iv in gt.intervals(v.video_id)] for v in gt.videos}
    dtext = write_detections(dets, gt.catalog)
    dback = parse_detections(dtext, gt.catalog, gt.videos)
    assert {k: v for k, v in dets.items() if v} == dback
    assert write_detections(dback, gt.catalog) == write_detections({k: v for k, v in dets.items() if v}, gt.catalog)


class TestMetricOutput:
    def test_single_point(self):
        s = MetricSeries("v", EvaluatorConfig(0.5), 0.5, np.array([1.0]), np.array([1.0]))
        assert write_metric_series(s) == "t,ia,weighted_ia\n0.500000,1.000000,1.000000\n"

    def test_empty(self):
        assert write_metric_series(None) == "t,ia,weighted_ia\n"

    def test_worked_example_row(self):
        grid = build_slot_grid(10, 1)
        s = evaluate_video(
            rasterize([LabeledInterval.make(3, 7, 1)], grid),
            rasterize([LabeledInterval.make(4, 8, 1, 0.9)], grid),
            EvaluatorConfig(1.0),
            "v1",
        )
        # Weighted values from tests/oracles.py: 3/4 at t'=5, 19/24 at t'=10, mean 0.8275.
        lines = write_metric_series(s).splitlines()
        assert lines[5] == "5.000000,0.800000,0.750000"
        assert lines[10] == "10.000000,0.800000,0.791667"
        summary = write_summary(maia([s]))
        assert summary == "video_id,avg_ia,avg_weighted_ia\nv1,0.856825,0.827500\nmaIA,0.856825,0.827500\n"
