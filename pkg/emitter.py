"""Stateless JSONL emitter for run logs and stage sidecars.

Each record is serialized and appended as a single line, enabling
line-by-line parsing by ``stats`` and external tools.

Design Principles:
    - Stateless: No global state or file handles kept open
    - Atomic: Each emit is a complete append operation
    - Deterministic: Field order follows the model, so equal records give equal lines

Functions:
    emit_log_entry: Append any pydantic record to a JSONL file
    write_records: Replace a JSONL file with a list of records
    read_records: Parse a JSONL file back into models

Example:
    >>> from emitter import emit_log_entry
    >>> from runner import build_log_entry
    >>> emit_log_entry(Path("./run.jsonl"), build_log_entry(stage="convert", role="info", content="done"))
"""

import json
from pathlib import Path
from typing import Iterable, TypeVar

from pydantic import BaseModel

RecordT = TypeVar("RecordT", bound=BaseModel)


def _line(record: BaseModel) -> str:
    serialized = record.model_dump(exclude_none=True)
    return json.dumps(serialized, ensure_ascii=True)


def emit_log_entry(path: Path, entry: BaseModel) -> None:
    """Append a record to a JSONL file.

    Args:
        path: Path to the JSONL file (created if it doesn't exist)
        entry: Any pydantic model, typically a LogEntry

    Side Effects:
        - Creates parent directories if they don't exist
        - Appends one line to the file
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as handle:
        handle.write(_line(entry) + "\n")


def write_records(path: Path, records: Iterable[BaseModel]) -> None:
    """Write records to ``path``, replacing any previous content."""
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "".join(_line(record) + "\n" for record in records)
    path.write_text(text, encoding="utf-8")


def read_records(path: Path, model: type[RecordT]) -> list[RecordT]:
    records = []
    with path.open("r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(model.model_validate(json.loads(line)))
    return records
