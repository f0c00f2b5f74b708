"""Streaming evaluation of online action detection with Instantaneous Accuracy."""

from .baselines import all_background, perfect_model, uniform_random
from .offline import average_precision, calibrated_average_precision, mean_over_classes
from .online import (
    DatasetSummary,
    EvaluatorConfig,
    EvaluatorState,
    MetricPoint,
    MetricSeries,
    UndefinedMetricError,
    advance,
    evaluate_video,
    ia_at,
    maia,
    weighted_ia_at,
)
from .timeline import (
    DenseLabeling,
    LabeledInterval,
    SlotGrid,
    SlotOutcome,
    TimeInterval,
    build_slot_grid,
    classify_slot,
    rasterize,
)

__version__ = "0.1.0"
