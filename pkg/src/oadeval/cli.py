"""Command-line front end.

Exit codes: 0 success, 2 usage or input errors, 3 stream-protocol errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import baselines
from .evaluation import compare_detectors, evaluate_corpus, write_comparison
from .formats import (
    METRIC_HEADER,
    GroundTruth,
    ParseError,
    StreamError,
    format_metric_row,
    parse_detections,
    parse_ground_truth,
    read_event_stream,
    write_detections,
    write_metric_series,
    write_summary,
)
from .online import DEFAULT_DELTA_T, EvaluatorConfig
from .streaming import DEFAULT_LATENCY, VideoStream

log = logging.getLogger("oadeval")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STREAM = 3


class InputError(Exception):
    pass


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0 or math.isnan(value):
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return value


def _latency(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text!r}")
    return value


def _read_text(path: Path, what: str) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"{what} not found: {path}") from None


def _load_gt(path: Path) -> GroundTruth:
    return parse_ground_truth(_read_text(path, "ground truth"))


def _make_baseline(gt: GroundTruth, kind: str, seed: int, rate: float, delta_t: float):
    if kind == baselines.BaselineKind.ALL_BACKGROUND.value:
        return {v.video_id: baselines.all_background(v.duration) for v in gt.videos}
    if kind == baselines.BaselineKind.PERFECT_MODEL.value:
        return {v.video_id: baselines.perfect_model(gt.intervals(v.video_id)) for v in gt.videos}
    if kind == baselines.BaselineKind.UNIFORM_RANDOM.value:
        if not len(gt.catalog):
            raise InputError("random baseline needs at least one action class")
        # Per-video seeds keep each video's draw independent of corpus order.
        return {
            v.video_id: baselines.uniform_random(seed + i, v.duration, gt.catalog.ids, rate, delta_t)
            for i, v in enumerate(gt.videos)
        }
    raise InputError(f"unknown baseline {kind!r}")


def _detectors(args, gt: GroundTruth) -> list[tuple[str, dict]]:
    found = []
    for path in args.det or []:
        path = Path(path)
        found.append((path.stem, parse_detections(_read_text(path, "detections"), gt.catalog, gt.videos)))
    for kind in args.baseline or []:
        found.append((kind, _make_baseline(gt, kind, args.seed, args.rate, args.delta_t)))
    return found


def _headline(summary, weighted: bool) -> str:
    if weighted:
        return f"weighted maIA {summary.weighted_maia:.6f} (maIA {summary.maia:.6f})"
    return f"maIA {summary.maia:.6f} (weighted maIA {summary.weighted_maia:.6f})"


def cmd_evaluate(args) -> int:
    gt = _load_gt(Path(args.gt))
    detectors = _detectors(args, gt)
    if len(detectors) != 1:
        raise InputError("evaluate needs exactly one of --det or --baseline")
    _, detections = detectors[0]
    config = EvaluatorConfig(args.delta_t, args.weighted)
    series, summary = evaluate_corpus(gt, detections, config, args.jobs)

    out = Path(args.out)
    (out / "series").mkdir(parents=True, exist_ok=True)
    for s in series:
        (out / "series" / f"{s.video_id}.csv").write_text(write_metric_series(s), encoding="utf-8")
    (out / "summary.csv").write_text(write_summary(summary), encoding="utf-8")
    print(_headline(summary, args.weighted))
    return EXIT_OK


def cmd_stream(args) -> int:
    gt = _load_gt(Path(args.gt))
    if args.video is not None:
        try:
            meta = gt.video(args.video)
        except KeyError:
            raise InputError(f"unknown video {args.video!r}") from None
    elif len(gt.videos) == 1:
        meta = gt.videos[0]
    else:
        raise InputError("ground truth has several videos; choose one with --video")

    stream = VideoStream(meta, gt.intervals(meta.video_id), args.delta_t, gt.catalog.ids, args.latency)
    out = sys.stdout
    out.write(METRIC_HEADER)

    def emit(points) -> None:
        for p in points:
            out.write(format_metric_row(p.t_prime, p.ia, p.weighted_ia))
        if points:
            out.flush()

    if args.events in (None, "-"):
        source = sys.stdin
    else:
        path = Path(args.events)
        if not path.exists():
            raise InputError(f"event stream not found: {path}")
        source = path.open(encoding="utf-8")
    try:
        for event in read_event_stream(source, gt.catalog, gt.videos):
            if event.video_id == meta.video_id:
                emit(stream.push(event))
    finally:
        if source is not sys.stdin:
            source.close()
    emit(stream.finish())
    return EXIT_OK


def cmd_baseline(args) -> int:
    gt = _load_gt(Path(args.gt))
    detections = _make_baseline(gt, args.baseline, args.seed, args.rate, args.delta_t)
    text = write_detections(detections, gt.catalog)
    if args.out is None:
        sys.stdout.write(text)
    else:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{args.baseline}.csv"
        path.write_text(text, encoding="utf-8")
        log.info("wrote %s", path)
    return EXIT_OK


def cmd_summarize(args) -> int:
    gt = _load_gt(Path(args.gt))
    detectors = _detectors(args, gt)
    if not detectors:
        raise InputError("summarize needs at least one --det or --baseline")
    config = EvaluatorConfig(args.delta_t, args.weighted)
    table = write_comparison(compare_detectors(gt, detectors, config, args.jobs))
    sys.stdout.write(table)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.csv").write_text(table, encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oadeval", description="Online action detection evaluation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gt", required=True, help="ground-truth file")
    common.add_argument("--delta-t", type=_positive_float, default=DEFAULT_DELTA_T, help="slot length in seconds")
    common.add_argument("--jobs", type=int, default=1, help="videos evaluated concurrently")
    common.add_argument(
        "--weighted",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="headline the weighted maIA (both are always written)",
    )

    baseline_opts = argparse.ArgumentParser(add_help=False)
    baseline_opts.add_argument("--seed", type=int, default=0)
    baseline_opts.add_argument("--rate", type=_positive_float, default=2.0, help="random detections per minute")

    kinds = [k.value for k in baselines.BaselineKind]

    p = sub.add_parser("evaluate", parents=[common, baseline_opts], help="IA series and maIA per video")
    p.add_argument("--det", action="append", help="detections file")
    p.add_argument("--baseline", action="append", choices=kinds)
    p.add_argument("--out", default="oadeval-out", help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stream", parents=[common], help="live IA over an event stream")
    p.add_argument("--events", default="-", help="event stream file, '-' for stdin")
    p.add_argument("--video", help="video to score (required when the corpus has several)")
    p.add_argument(
        "--latency", type=_latency, default=DEFAULT_LATENCY,
        help="seconds a slot stays open for revisions; 'inf' waits for the end of the stream",
    )
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("baseline", parents=[common, baseline_opts], help="write baseline detections")
    p.add_argument("--baseline", required=True, choices=kinds)
    p.add_argument("--out", help="output directory (stdout when omitted)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("summarize", parents=[common, baseline_opts], help="mAP, cAP and maIA per detector")
    p.add_argument("--det", action="append", help="detections file (repeatable)")
    p.add_argument("--baseline", action="append", choices=kinds)
    p.add_argument("--out", help="also write comparison.csv here")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except StreamError as exc:
        print(f"oadeval: stream error: {exc}", file=sys.stderr)
        return EXIT_STREAM
    except (InputError, ParseError, ValueError, OSError) as exc:
        print(f"oadeval: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
