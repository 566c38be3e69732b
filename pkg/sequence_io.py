"""Sequence interchange files (see FORMAT.md).

Text form (canonical): line 1 is a JSON header, every further line is one
frame ``{"t": ..., "points": [x, y, z, ...], "skeleton": [...45 floats]}``.
Floats are written with Python's shortest round-trip repr, so a float64
coordinate survives write/read bit-for-bit and equal sequences produce
equal bytes.

Binary form: ``MMCONVB1`` magic, uint32 header length, the header JSON,
uint32 frame count, then per frame int64 t, uint32 M, uint8 labeled flag,
M*3 little-endian float32 coordinates and, if labeled, 45 float32 joint
coordinates. Coordinates are narrowed to float32.
"""

import json
import struct
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import ValidationError

from geometry import JOINT_NAMES, NUM_JOINTS, Frame, GeometryError, PointCloud, Sequence, Skeleton
from schemas import FrameRecord, SequenceHeader

BINARY_MAGIC = b"MMCONVB1"
FileFormat = Literal["text", "binary"]


class SequenceFormatError(ValueError):
    """Raised for malformed sequence content; the message carries the line or frame."""


class SequenceIOError(OSError):
    """Raised when a sequence file cannot be read or written."""


def _reject_constant(name: str) -> float:
    raise ValueError(f"non-finite number {name} is not allowed")


def _header_for(seq: Sequence) -> SequenceHeader:
    return SequenceHeader(
        source=seq.source,
        frame_rate=seq.frame_rate,
        name=seq.name,
        joints=list(JOINT_NAMES) if seq.is_labeled else None,
    )


def _dump_line(record) -> str:
    return json.dumps(record.model_dump(exclude_none=True), ensure_ascii=True, separators=(",", ":"))


def dumps_sequence(seq: Sequence) -> str:
    """Serialize to the canonical text form."""
    if len(seq) == 0:
        raise SequenceFormatError("sequence must contain at least one frame")
    lines = [_dump_line(_header_for(seq))]
    for frame in seq.frames:
        record = FrameRecord(
            t=frame.t,
            points=frame.cloud.points.ravel().tolist(),
            skeleton=None if frame.skeleton is None else frame.skeleton.joints.ravel().tolist(),
        )
        lines.append(_dump_line(record))
    return "\n".join(lines) + "\n"


def _check_header(header: SequenceHeader, labeled: bool, where: str) -> None:
    if labeled:
        if header.joints is None:
            raise SequenceFormatError(f"{where}: frames carry skeletons but header lists no joints")
        if tuple(header.joints) != JOINT_NAMES:
            raise SequenceFormatError(
                f"{where}: header joint order must be the canonical {NUM_JOINTS}-joint order"
            )


def _build_frame(record: FrameRecord, where: str) -> Frame:
    if len(record.points) % 3 != 0:
        raise SequenceFormatError(f"{where} (frame t={record.t}): point list length is not a multiple of 3")
    skeleton = None
    if record.skeleton is not None:
        if len(record.skeleton) != NUM_JOINTS * 3:
            raise SequenceFormatError(
                f"{where} (frame t={record.t}): skeleton must have {NUM_JOINTS} joints, "
                f"got {len(record.skeleton) / 3:g}"
            )
        skeleton = Skeleton(np.asarray(record.skeleton).reshape(NUM_JOINTS, 3))
    return Frame(t=record.t, cloud=PointCloud(np.asarray(record.points).reshape(-1, 3)), skeleton=skeleton)


def loads_sequence(text: str, origin: str = "<string>") -> Sequence:
    """Parse the text form; every error names ``origin`` and the line number."""
    lines = text.splitlines()
    header: SequenceHeader | None = None
    frames: list[Frame] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        where = f"{origin}:{lineno}"
        try:
            payload = json.loads(line, parse_constant=_reject_constant)
            if header is None:
                header = SequenceHeader.model_validate(payload)
                continue
            record = FrameRecord.model_validate(payload)
            frame = _build_frame(record, where)
        except (ValueError, ValidationError, GeometryError) as exc:
            if isinstance(exc, SequenceFormatError):
                raise
            raise SequenceFormatError(f"{where}: {exc}") from exc
        if frames and frame.t <= frames[-1].t:
            raise SequenceFormatError(f"{where}: timestep {frame.t} does not increase (previous {frames[-1].t})")
        frames.append(frame)
    if header is None:
        raise SequenceFormatError(f"{origin}: missing header line")
    try:
        seq = Sequence(frames=tuple(frames), source=header.source, frame_rate=header.frame_rate, name=header.name)
    except GeometryError as exc:
        raise SequenceFormatError(f"{origin}: {exc}") from exc
    _check_header(header, seq.is_labeled, origin)
    return seq


def _encode_binary(seq: Sequence) -> bytes:
    if len(seq) == 0:
        raise SequenceFormatError("sequence must contain at least one frame")
    header = _dump_line(_header_for(seq)).encode("utf-8")
    chunks = [BINARY_MAGIC, struct.pack("<I", len(header)), header, struct.pack("<I", len(seq))]
    for frame in seq.frames:
        labeled = frame.skeleton is not None
        chunks.append(struct.pack("<qIB", frame.t, len(frame.cloud), int(labeled)))
        chunks.append(frame.cloud.points.astype("<f4").tobytes())
        if labeled:
            chunks.append(frame.skeleton.joints.astype("<f4").tobytes())
    return b"".join(chunks)


def _decode_binary(data: bytes, origin: str) -> Sequence:
    try:
        offset = len(BINARY_MAGIC)
        (header_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        header = SequenceHeader.model_validate(
            json.loads(data[offset:offset + header_len].decode("utf-8"), parse_constant=_reject_constant)
        )
        offset += header_len
        (count,) = struct.unpack_from("<I", data, offset)
        offset += 4
        frames = []
        for index in range(count):
            t, m, labeled = struct.unpack_from("<qIB", data, offset)
            offset += struct.calcsize("<qIB")
            points = np.frombuffer(data, dtype="<f4", count=m * 3, offset=offset).astype(np.float64)
            offset += m * 12
            skeleton = None
            if labeled:
                joints = np.frombuffer(data, dtype="<f4", count=NUM_JOINTS * 3, offset=offset)
                skeleton = Skeleton(joints.astype(np.float64).reshape(NUM_JOINTS, 3))
                offset += NUM_JOINTS * 12
            frames.append(Frame(t=t, cloud=PointCloud(points.reshape(-1, 3)), skeleton=skeleton))
        if offset != len(data):
            raise SequenceFormatError(f"{origin}: {len(data) - offset} trailing bytes")
        seq = Sequence(frames=tuple(frames), source=header.source, frame_rate=header.frame_rate, name=header.name)
    except SequenceFormatError:
        raise
    except (struct.error, ValueError, ValidationError, GeometryError) as exc:
        raise SequenceFormatError(f"{origin}: corrupt binary sequence: {exc}") from exc
    _check_header(header, seq.is_labeled, origin)
    return seq


def read_sequence(path: Path) -> Sequence:
    """Read a text or binary sequence file (detected by its magic bytes)."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise SequenceIOError(f"{path}: cannot read sequence: {exc}") from exc
    if data.startswith(BINARY_MAGIC):
        return _decode_binary(data, str(path))
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SequenceFormatError(f"{path}: not UTF-8 text: {exc}") from exc
    return loads_sequence(text, origin=str(path))


def write_sequence(seq: Sequence, path: Path, fmt: FileFormat = "text") -> None:
    """Write ``seq`` deterministically; identical sequences give identical bytes."""
    path = Path(path)
    payload = _encode_binary(seq) if fmt == "binary" else dumps_sequence(seq).encode("utf-8")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as exc:
        raise SequenceIOError(f"{path}: cannot write sequence: {exc}") from exc
