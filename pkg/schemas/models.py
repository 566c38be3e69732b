"""Pydantic record models for files, logs and reports.

This module defines the serialized shapes used throughout the package:
- Sequence file records (SequenceHeader, FrameRecord)
- Loss and metric reports (LossReport, SequenceMetrics)
- Per-frame conversion records for the stage sidecar (StageRecord)
- Run-log entries (LogEntry) and per-file run summaries (RunSummary)

Field order is the serialization order, so dumping a model twice yields
identical JSON.

Example:
    >>> from schemas import LossReport
    >>> report = LossReport(l_dyn=0.05, l_sta=0.0, l_con=0.05, l_total=0.0005,
    ...                     dyn_indices=list(range(15)), sta_indices=[])
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict

FORMAT_NAME = "mmconv-sequence"
FORMAT_VERSION = "1"


class SequenceHeader(BaseModel):
    """First line of a sequence file.

    Attributes:
        format: Always "mmconv-sequence"
        version: Format version string
        source: "lidar", "mmwave" or "converted"
        frame_rate: Frames per second
        units: Coordinate unit; only "m" is accepted
        name: Sequence id
        joints: Canonical joint names when frames carry skeletons, else None
    """
    model_config = ConfigDict(extra="forbid")

    format: Literal["mmconv-sequence"] = FORMAT_NAME
    version: str = FORMAT_VERSION
    source: Literal["lidar", "mmwave", "converted"]
    frame_rate: float
    units: Literal["m"] = "m"
    name: str = ""
    joints: list[str] | None = None


class FrameRecord(BaseModel):
    """One frame line: timestep, flattened xyz points, optional flattened skeleton."""
    model_config = ConfigDict(extra="forbid")

    t: int
    points: list[float]
    skeleton: list[float] | None = None


class LossReport(BaseModel):
    """Consistency-loss breakdown for one frame pair (or a mean over pairs).

    Attributes:
        l_dyn: Hinge loss over joints near detections
        l_sta: Flow-magnitude loss over joints far from detections
        l_con: l_dyn + l_sta
        l_lab: Supervised MSE when ground truth is available, else None
        l_total: l_lab (0 when absent) + lambda_con * l_con
        dyn_indices: Joint indices treated as dynamic
        sta_indices: Joint indices treated as static
        pairs: Number of frame pairs aggregated into this report
    """
    l_dyn: float
    l_sta: float
    l_con: float
    l_lab: float | None = None
    l_total: float
    dyn_indices: list[int] = []
    sta_indices: list[int] = []
    pairs: int = 1


class SequenceMetrics(BaseModel):
    """Frame-averaged pose errors in centimeters."""
    name: str = ""
    frames: int
    mpjpe_cm: float
    pa_mpjpe_cm: float


class StageRecord(BaseModel):
    """Point counts after each conversion stage for one frame.

    Stages that did not run repeat the previous count. ``flow_hist`` holds
    counts of pre-FPF interpolated flow magnitudes per histogram bin and is
    empty where FPF did not run.
    """
    sequence: str
    t: int
    input: int
    after_npa: int
    after_fpf: int
    after_rs: int
    after_ni: int
    nu: float | None = None
    flow_hist: list[int] = []


class RunSummary(BaseModel):
    """Console/JSON summary for one processed file."""
    input: str
    output: str
    sequence: str
    frames: int
    mean_points: dict[str, float]
    offset: list[float] | None = None
    duration_seconds: float | None = None


class LogEntry(BaseModel):
    """Single entry of the structured run log.

    Attributes:
        timestamp: ISO 8601 UTC timestamp
        stage: Subcommand or pipeline stage (e.g. "convert")
        role: "info", "warning" or "error"
        content: Free-text message
        sequence: Sequence id when the entry concerns one sequence
        duration_seconds: Wall time of the operation (optional)
    """
    timestamp: str
    stage: str
    role: str
    content: str
    sequence: str | None = None
    duration_seconds: float | None = None
