# evaluation/__init__.py
"""Evaluation of predictions and converted data.

Modules:
    metrics: MPJPE / PA-MPJPE with similarity Procrustes alignment
    stats: Per-frame point-count and flow-histogram CSV rows

Key Classes:
    SimilarityTransform: Result of procrustes_align
    MetricsError: Degenerate skeletons or misaligned sequences
"""

from .metrics import (
    MetricsError,
    SimilarityTransform,
    aggregate_metrics,
    mpjpe,
    pa_mpjpe,
    procrustes_align,
    sequence_metrics,
)
from .stats import CSV_COLUMNS, frame_rows, render_csv, write_csv

__all__ = [
    # Metrics
    "MetricsError",
    "SimilarityTransform",
    "mpjpe",
    "procrustes_align",
    "pa_mpjpe",
    "sequence_metrics",
    "aggregate_metrics",
    # Statistics
    "CSV_COLUMNS",
    "frame_rows",
    "render_csv",
    "write_csv",
]
