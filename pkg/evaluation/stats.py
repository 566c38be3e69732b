"""Per-frame dataset statistics as CSV rows.

One row per frame. Stage columns and flow-histogram columns are filled
from a converted file's stage sidecar when present and left empty
otherwise. The column header is ``CSV_COLUMNS``.
"""

import csv
import io
from pathlib import Path

from conversion import FLOW_HIST_EDGES_M
from geometry import Sequence
from schemas import StageRecord


def _bin_label(lo: float, hi: float) -> str:
    hi_label = "inf" if hi == float("inf") else f"{hi * 100:g}"
    return f"flow_{lo * 100:g}_{hi_label}cm"


FLOW_BIN_COLUMNS = tuple(_bin_label(lo, hi) for lo, hi in zip(FLOW_HIST_EDGES_M, FLOW_HIST_EDGES_M[1:]))
STAGE_COLUMNS = ("input", "after_npa", "after_fpf", "after_rs", "after_ni", "nu")
CSV_COLUMNS = ("sequence", "t", "points", "labeled") + STAGE_COLUMNS + FLOW_BIN_COLUMNS


def frame_rows(seq: Sequence, stages: list[StageRecord] | None = None) -> list[dict[str, object]]:
    by_t = {record.t: record for record in stages or []}
    rows = []
    for frame in seq.frames:
        row: dict[str, object] = {column: "" for column in CSV_COLUMNS}
        row.update(sequence=seq.name, t=frame.t, points=len(frame.cloud), labeled=int(frame.skeleton is not None))
        record = by_t.get(frame.t)
        if record is not None:
            for column in STAGE_COLUMNS[:-1]:
                row[column] = getattr(record, column)
            row["nu"] = "" if record.nu is None else f"{record.nu:.6f}"
            for column, count in zip(FLOW_BIN_COLUMNS, record.flow_hist):
                row[column] = count
        rows.append(row)
    return rows


def render_csv(rows: list[dict[str, object]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def write_csv(path: Path, rows: list[dict[str, object]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(rows), encoding="utf-8")
