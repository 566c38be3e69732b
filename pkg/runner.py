"""Per-file jobs, the worker pool and run-log helpers.

Each job reads one sequence file, processes it and writes its outputs.
Jobs are plain picklable dataclasses run by top-level functions so they can
be dispatched to worker processes. Every random draw is keyed by sequence
name and frame, so results do not depend on how many workers run.

Functions:
    iso8601_utc_timestamp: Current UTC timestamp in ISO 8601 format
    build_log_entry: Construct a LogEntry with current timestamp
    convert_one: Run the conversion pipeline on one file
    preprocess_one: Run the preprocessing chain on one file
    run_jobs: Map a job function over jobs, in input order

Example:
    >>> from runner import ConvertJob, convert_one, run_jobs
    >>> summaries = run_jobs(convert_one, jobs, workers=4)
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, TypeVar

import numpy as np

from config import ConversionConfig, PreprocessConfig
from conversion import convert_sequence_traced
from emitter import write_records
from geometry import Sequence
from preprocess import preprocess_sequence
from run_paths import FilePaths
from schemas import LogEntry, RunSummary, StageRecord
from seeded_rng import SeededRng
from sequence_io import FileFormat, read_sequence, write_sequence

JobT = TypeVar("JobT")
STAGE_KEYS = ("input", "npa", "fpf", "rs", "ni")


def iso8601_utc_timestamp() -> str:
    """Generate current UTC timestamp in ISO 8601 format.

    Returns:
        str: Timestamp string like "2026-01-01T12:00:00Z"

    Note:
        - Microseconds are truncated for cleaner output
        - Uses "Z" suffix instead of "+00:00" for brevity
    """
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def build_log_entry(
    stage: str,
    role: str,
    content: str,
    sequence: str | None = None,
    duration_seconds: float | None = None,
) -> LogEntry:
    """Construct a LogEntry with auto-generated timestamp.

    Args:
        stage: Subcommand or pipeline stage (e.g. "convert")
        role: "info", "warning" or "error"
        content: Text content of the log entry
        sequence: Optional sequence id the entry concerns
        duration_seconds: Optional duration of the operation

    Example:
        >>> entry = build_log_entry(
        ...     stage="convert",
        ...     role="info",
        ...     content="wrote out/seq_000.jsonl",
        ...     sequence="seq_000",
        ...     duration_seconds=0.5,
        ... )
    """
    return LogEntry(
        timestamp=iso8601_utc_timestamp(),
        stage=stage,
        role=role,
        content=content,
        sequence=sequence,
        duration_seconds=duration_seconds,
    )


def _load_named(paths: FilePaths) -> Sequence:
    seq = read_sequence(paths.source)
    if not seq.name:
        seq = seq.with_frames(seq.frames, name=paths.source.stem)
    return seq


@dataclass(frozen=True)
class ConvertJob:
    paths: FilePaths
    config: ConversionConfig
    seed: int
    fmt: FileFormat = "text"


@dataclass(frozen=True)
class PreprocessJob:
    paths: FilePaths
    config: PreprocessConfig
    seed: int | None = None
    augment: bool = False
    fmt: FileFormat = "text"


def convert_one(job: ConvertJob) -> RunSummary:
    """Convert one file and write the converted sequence plus its stage sidecar."""
    started = time.perf_counter()
    seq = _load_named(job.paths)
    converted, traces = convert_sequence_traced(seq, job.config, SeededRng(job.seed))
    write_sequence(converted, job.paths.output, job.fmt)
    write_records(
        job.paths.stages,
        (
            StageRecord(
                sequence=seq.name,
                t=trace.t,
                input=trace.counts["input"],
                after_npa=trace.counts["npa"],
                after_fpf=trace.counts["fpf"],
                after_rs=trace.counts["rs"],
                after_ni=trace.counts["ni"],
                nu=trace.nu,
                flow_hist=trace.flow_histogram(),
            )
            for trace in traces
        ),
    )
    return RunSummary(
        input=str(job.paths.source),
        output=str(job.paths.output),
        sequence=seq.name,
        frames=len(converted),
        mean_points={key: float(np.mean([trace.counts[key] for trace in traces])) for key in STAGE_KEYS},
        duration_seconds=time.perf_counter() - started,
    )


def preprocess_one(job: PreprocessJob) -> RunSummary:
    """Normalize, filter, optionally augment and resample one file."""
    started = time.perf_counter()
    seq = _load_named(job.paths)
    # Without augmentation nothing is drawn unless a cloud has too many points;
    # seed 0 keeps that subsampling reproducible.
    rng = SeededRng(0 if job.seed is None else job.seed)
    result = preprocess_sequence(seq, job.config, rng, augment=job.augment)
    write_sequence(result.sequence, job.paths.output, job.fmt)
    return RunSummary(
        input=str(job.paths.source),
        output=str(job.paths.output),
        sequence=seq.name,
        frames=len(result.sequence),
        mean_points={
            "input": float(np.mean([len(f.cloud) for f in seq.frames])),
            "output": float(np.mean([len(f.cloud) for f in result.sequence.frames])),
        },
        offset=[float(v) for v in result.offset],
        duration_seconds=time.perf_counter() - started,
    )


def run_jobs(fn: Callable[[JobT], RunSummary], jobs: list[JobT], workers: int = 1) -> list[RunSummary]:
    """Apply ``fn`` to every job; results come back in job order.

    The first failing job's exception propagates to the caller.
    """
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))
