from .models import (
    FORMAT_NAME,
    FORMAT_VERSION,
    FrameRecord,
    LogEntry,
    LossReport,
    RunSummary,
    SequenceHeader,
    SequenceMetrics,
    StageRecord,
)

__all__ = [
    "FORMAT_NAME",
    "FORMAT_VERSION",
    "SequenceHeader",
    "FrameRecord",
    "LossReport",
    "SequenceMetrics",
    "StageRecord",
    "RunSummary",
    "LogEntry",
]
