"""Ground-truth, detection and event-stream files, and metric CSV output.

Ground truth::

    # comments and blank lines are ignored
    [classes]            # optional; otherwise ids follow first appearance
    Run
    [videos]
    v1,600.0
    [annotations]
    v1,Run,3.0,7.0

Detections use a ``[detections]`` section (the header may be omitted) with
rows ``video_id,class_name,start,end,score``. Event streams are bare rows
``video_id,class_name,start,end,score,emit_time``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

from .online import DatasetSummary, MetricSeries
from .timeline import LabeledInterval, TimeInterval


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"{message}, line {line}" if line is not None else message)


class StreamError(Exception):
    """Violation of the event-stream protocol."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"{message}, line {line}" if line is not None else message)


class StreamOrderError(StreamError):
    pass


class CausalityError(StreamError):
    pass


@dataclass(frozen=True)
class ClassCatalog:
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")
        if any(not n or n == "background" for n in self.names):
            raise ValueError("class names must be non-empty and not 'background'")

    def __len__(self) -> int:
        return len(self.names)

    @property
    def ids(self) -> range:
        return range(1, len(self.names) + 1)

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name) + 1
        except ValueError:
            raise KeyError(name) from None

    def name_of(self, class_id: int) -> str:
        if class_id == 0:
            return "background"
        return self.names[class_id - 1]


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    duration: float

    def __post_init__(self) -> None:
        if not self.video_id or any(ch in self.video_id for ch in "/\\,") or self.video_id.startswith("."):
            raise ValueError(f"invalid video id {self.video_id!r}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class GroundTruth:
    catalog: ClassCatalog
    videos: tuple[VideoMeta, ...]
    annotations: Mapping[str, list[LabeledInterval]] = field(default_factory=dict)

    def video(self, video_id: str) -> VideoMeta:
        for v in self.videos:
            if v.video_id == video_id:
                return v
        raise KeyError(video_id)

    def intervals(self, video_id: str) -> list[LabeledInterval]:
        return self.annotations.get(video_id, [])


def _lines(text: str | Iterable[str]) -> Iterator[tuple[int, str]]:
    source = text.splitlines() if isinstance(text, str) else text
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _number(token: str, what: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"malformed {what} {token!r}", lineno) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite, got {token!r}", lineno)
    return value


def _fields(line: str, expected: int, lineno: int) -> list[str]:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) != expected:
        raise ParseError(f"expected {expected} comma-separated fields, got {len(parts)}", lineno)
    return parts


def _interval(
    parts: list[str],
    lineno: int,
    catalog: ClassCatalog,
    durations: Mapping[str, float] | None,
    score: float | None = None,
) -> LabeledInterval:
    video_id, class_name, start_s, end_s = parts[:4]
    if durations is not None and video_id not in durations:
        raise ParseError(f"unknown video {video_id!r}", lineno)
    try:
        class_id = catalog.id_of(class_name)
    except KeyError:
        raise ParseError(f"unknown class {class_name!r}", lineno) from None
    start = _number(start_s, "start", lineno)
    end = _number(end_s, "end", lineno)
    if start < 0:
        raise ParseError(f"negative start {start}", lineno)
    if end <= start:
        raise ParseError("end before start" if end < start else "zero-length interval", lineno)
    if durations is not None and end > durations[video_id]:
        raise ParseError(f"interval ends at {end}, beyond duration {durations[video_id]} of {video_id!r}", lineno)
    if score is not None and not 0.0 <= score <= 1.0:
        raise ParseError(f"score {score} outside [0, 1]", lineno)
    return LabeledInterval(TimeInterval(start, end), class_id, score)


def parse_ground_truth(text: str | Iterable[str]) -> GroundTruth:
    declared: list[str] | None = None
    videos: list[VideoMeta] = []
    durations: dict[str, float] = {}
    raw_rows: list[tuple[int, list[str]]] = []
    section = None

    for lineno, line in _lines(text):
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("classes", "videos", "annotations"):
                raise ParseError(f"unknown section [{section}]", lineno)
            if section == "classes":
                declared = declared or []
            continue
        if section is None:
            raise ParseError("row outside of any section", lineno)
        if section == "classes":
            if "," in line:
                raise ParseError("class rows hold a single name", lineno)
            if line in declared or line == "background":
                raise ParseError(f"duplicate or reserved class name {line!r}", lineno)
            declared.append(line)
        elif section == "videos":
            video_id, dur_s = _fields(line, 2, lineno)
            if video_id in durations:
                raise ParseError(f"duplicate video {video_id!r}", lineno)
            duration = _number(dur_s, "duration", lineno)
            try:
                videos.append(VideoMeta(video_id, duration))
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            durations[video_id] = duration
        else:
            raw_rows.append((lineno, _fields(line, 4, lineno)))

    if declared is None:
        declared = []
        for _, parts in raw_rows:
            if parts[1] and parts[1] not in declared and parts[1] != "background":
                declared.append(parts[1])
    catalog = ClassCatalog(tuple(declared))

    annotations: dict[str, list[LabeledInterval]] = {v.video_id: [] for v in videos}
    for lineno, parts in raw_rows:
        iv = _interval(parts, lineno, catalog, durations)
        annotations[parts[0]].append(iv)
    return GroundTruth(catalog, tuple(videos), annotations)


def parse_detections(
    text: str | Iterable[str],
    catalog: ClassCatalog,
    videos: Sequence[VideoMeta] | None = None,
) -> dict[str, list[LabeledInterval]]:
    """Detections keyed by video id. An empty file is valid and means no detections."""
    durations = None if videos is None else {v.video_id: v.duration for v in videos}
    detections: dict[str, list[LabeledInterval]] = {}
    seen_header = False
    for lineno, line in _lines(text):
        if line.startswith("[") and line.endswith("]"):
            if line[1:-1].strip().lower() != "detections" or seen_header:
                raise ParseError(f"unexpected section {line}", lineno)
            seen_header = True
            continue
        parts = _fields(line, 5, lineno)
        score = _number(parts[4], "score", lineno)
        iv = _interval(parts, lineno, catalog, durations, score=score)
        detections.setdefault(parts[0], []).append(iv)
    return detections


@dataclass(frozen=True)
class DetectionEvent:
    video_id: str
    detection: LabeledInterval
    emit_time: float


def read_event_stream(
    lines: Iterable[str],
    catalog: ClassCatalog,
    videos: Sequence[VideoMeta] | None = None,
) -> Iterator[DetectionEvent]:
    """Yield events in arrival order, enforcing per-video order and causality.

    Errors surface lazily, when the offending line is reached.
    """
    durations = None if videos is None else {v.video_id: v.duration for v in videos}
    last_emit: dict[str, float] = {}
    for lineno, line in _lines(lines):
        parts = _fields(line, 6, lineno)
        score = _number(parts[4], "score", lineno)
        emit_time = _number(parts[5], "emit_time", lineno)
        iv = _interval(parts, lineno, catalog, durations, score=score)
        video_id = parts[0]
        if emit_time < last_emit.get(video_id, -math.inf):
            raise StreamOrderError(
                f"emit_time {emit_time} precedes {last_emit[video_id]} for video {video_id!r}", lineno
            )
        if iv.end > emit_time:
            raise CausalityError(f"detection ends at {iv.end}, after its emit_time {emit_time}", lineno)
        last_emit[video_id] = emit_time
        yield DetectionEvent(video_id, iv, emit_time)


def detections_to_events(detections: Mapping[str, Sequence[LabeledInterval]]) -> list[DetectionEvent]:
    """Replay batch detections, each emitted at its own end time."""
    events = [
        DetectionEvent(video_id, iv, iv.end) for video_id, ivs in detections.items() for iv in ivs
    ]
    # Stable: equal emit times keep file order.
    events.sort(key=lambda e: e.emit_time)
    return events


def _row(*fields: object) -> str:
    return ",".join(repr(f) if isinstance(f, float) else str(f) for f in fields) + "\n"


def write_ground_truth(gt: GroundTruth) -> str:
    out = ["[classes]\n"]
    out += [f"{name}\n" for name in gt.catalog.names]
    out.append("[videos]\n")
    out += [_row(v.video_id, float(v.duration)) for v in gt.videos]
    out.append("[annotations]\n")
    for v in gt.videos:
        for iv in gt.intervals(v.video_id):
            out.append(_row(v.video_id, gt.catalog.name_of(iv.class_id), iv.start, iv.end))
    return "".join(out)


def write_detections(detections: Mapping[str, Sequence[LabeledInterval]], catalog: ClassCatalog) -> str:
    out = ["[detections]\n"]
    for video_id, ivs in detections.items():
        for iv in ivs:
            score = 1.0 if iv.score is None else float(iv.score)
            out.append(_row(video_id, catalog.name_of(iv.class_id), iv.start, iv.end, score))
    return "".join(out)


def write_event_stream(events: Iterable[DetectionEvent], catalog: ClassCatalog) -> str:
    return "".join(
        _row(
            e.video_id,
            catalog.name_of(e.detection.class_id),
            e.detection.start,
            e.detection.end,
            float(e.detection.score if e.detection.score is not None else 1.0),
            float(e.emit_time),
        )
        for e in events
    )


METRIC_HEADER = "t,ia,weighted_ia\n"
SUMMARY_HEADER = "video_id,avg_ia,avg_weighted_ia\n"


def format_metric_row(t_prime: float, ia: float, weighted_ia: float) -> str:
    return f"{t_prime:.6f},{ia:.6f},{weighted_ia:.6f}\n"


def write_metric_series(series: MetricSeries | None) -> str:
    if series is None or len(series) == 0:
        return METRIC_HEADER
    rows = map(format_metric_row, series.t_prime.tolist(), series.ia.tolist(), series.weighted_ia.tolist())
    return METRIC_HEADER + "".join(rows)


def write_summary(summary: DatasetSummary) -> str:
    out = [SUMMARY_HEADER]
    for video_id, avg in summary.per_video_average.items():
        out.append(f"{video_id},{avg:.6f},{summary.per_video_weighted_average[video_id]:.6f}\n")
    out.append(f"maIA,{summary.maia:.6f},{summary.weighted_maia:.6f}\n")
    return "".join(out)
