from .core import (
    METRIC_NAMES,
    SEVEN,
    RednessThresholds,
    all_metrics,
    brightness,
    centeredness,
    colorfulness,
    entropy_bits,
    grayscale,
    object_size,
    redness,
    simplicity,
    squareness,
)
from .masks import Mask, foreground, largest_component, segment_largest
from .report import MetricRow, MetricTable, metric_report, metric_values, summarize

__all__ = [
    "METRIC_NAMES", "SEVEN", "RednessThresholds", "all_metrics", "brightness",
    "centeredness", "colorfulness", "entropy_bits", "grayscale", "object_size",
    "redness", "simplicity", "squareness", "Mask", "foreground",
    "largest_component", "segment_largest", "MetricRow", "MetricTable",
    "metric_report", "metric_values", "summarize",
]
