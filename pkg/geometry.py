"""Shared geometric value types and helpers.

Every coordinate container in the package is an immutable float64 numpy
array in meters. Types validate shape and finiteness on construction and
freeze their arrays, so a value can be handed to any number of workers.

Canonical joint order (15 joints):
    0 pelvis, 1 left-hip, 2 left-knee, 3 left-ankle, 4 right-hip,
    5 right-knee, 6 right-ankle, 7 neck, 8 head, 9 left-shoulder,
    10 left-elbow, 11 left-wrist, 12 right-shoulder, 13 right-elbow,
    14 right-wrist

Bounding-cube corner order: corner k has x = hi if bit 2 of k is set,
y = hi if bit 1 is set, z = hi if bit 0 is set (lo otherwise).

Example:
    >>> from geometry import PointCloud, Skeleton, nearest_point_distance
    >>> cloud = PointCloud([[3.0, 4.0, 0.0], [10.0, 0.0, 0.0]])
    >>> nearest_point_distance(np.zeros(3), cloud)
    5.0
"""

from dataclasses import dataclass
from typing import Literal, Sequence as Seq

import numpy as np

NUM_JOINTS = 15
NUM_EXTENDED = NUM_JOINTS + 8
MIN_CUBE_SIDE = 1e-3

JOINT_NAMES: tuple[str, ...] = (
    "pelvis",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_hip",
    "right_knee",
    "right_ankle",
    "neck",
    "head",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
)

BONES: tuple[tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3),
    (0, 4), (4, 5), (5, 6),
    (0, 7), (7, 8),
    (7, 9), (9, 10), (10, 11),
    (7, 12), (12, 13), (13, 14),
)

SourceTag = Literal["lidar", "mmwave", "converted"]


class GeometryError(ValueError):
    """Raised when a geometric value violates its invariants."""


def _as_points(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise GeometryError(f"{name} must have shape (N, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{name} contains non-finite coordinates")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PointCloud:
    """One sensor frame: M >= 0 ordered 3D points in meters."""
    points: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", _as_points(self.points, "point cloud"))

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Exactly 15 joints in the canonical order."""
    joints: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_points(self.joints, "skeleton")
        if arr.shape[0] != NUM_JOINTS:
            raise GeometryError(f"skeleton must have {NUM_JOINTS} joints, got {arr.shape[0]}")
        object.__setattr__(self, "joints", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Skeleton):
            return NotImplemented
        return np.array_equal(self.joints, other.joints)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-point displacement vectors, index-aligned with a PointCloud."""
    vectors: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "vectors", _as_points(self.vectors, "flow field"))

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    def magnitudes(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)


@dataclass(frozen=True)
class Frame:
    t: int
    cloud: PointCloud
    skeleton: Skeleton | None = None

    def __post_init__(self) -> None:
        if self.t < 0:
            raise GeometryError(f"frame timestep must be >= 0, got {self.t}")


@dataclass(frozen=True)
class Sequence:
    """Ordered frames at a fixed frame rate.

    Attributes:
        frames: Frames with strictly increasing ``t``
        source: "lidar", "mmwave" or "converted"
        frame_rate: Frames per second (Hz)
        name: Sequence id; also keys the per-sequence random streams
    """
    frames: tuple[Frame, ...]
    source: SourceTag = "lidar"
    frame_rate: float = 10.0
    name: str = ""

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if self.frame_rate <= 0 or not np.isfinite(self.frame_rate):
            raise GeometryError(f"frame rate must be positive, got {self.frame_rate}")
        for prev, cur in zip(frames, frames[1:]):
            if cur.t <= prev.t:
                raise GeometryError(f"timesteps must be strictly increasing: {prev.t} then {cur.t}")
        labeled = {f.skeleton is not None for f in frames}
        if len(labeled) > 1:
            raise GeometryError("either every frame has a skeleton or none does")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def is_labeled(self) -> bool:
        return bool(self.frames) and self.frames[0].skeleton is not None

    def with_frames(self, frames: Seq[Frame], **changes) -> "Sequence":
        return Sequence(
            frames=tuple(frames),
            source=changes.get("source", self.source),
            frame_rate=changes.get("frame_rate", self.frame_rate),
            name=changes.get("name", self.name),
        )


def nearest_distances(joints: np.ndarray, cloud: PointCloud) -> np.ndarray:
    """Exact per-joint distance to the closest cloud point (brute-force scan)."""
    if len(cloud) == 0:
        raise GeometryError("empty point cloud")
    diff = np.asarray(joints, dtype=np.float64)[:, None, :] - cloud.points[None, :, :]
    return np.sqrt(np.min(np.einsum("jmk,jmk->jm", diff, diff), axis=1))


def nearest_point_distance(joint, cloud: PointCloud) -> float:
    """Euclidean distance from ``joint`` to its nearest point in ``cloud``."""
    return float(nearest_distances(np.asarray(joint, dtype=np.float64).reshape(1, 3), cloud)[0])


def _stack(point_sets) -> np.ndarray:
    arrays = []
    for item in point_sets:
        if isinstance(item, PointCloud):
            arrays.append(item.points)
        elif isinstance(item, Skeleton):
            arrays.append(item.joints)
        else:
            arrays.append(_as_points(item, "point set"))
    if not arrays:
        raise GeometryError("bounding cube needs at least one point")
    stacked = np.vstack(arrays)
    if stacked.shape[0] == 0:
        raise GeometryError("bounding cube needs at least one point")
    return stacked


def bounding_cube(*point_sets) -> np.ndarray:
    """Eight corners of the axis-aligned cube enclosing every input point.

    The AABB of the union is grown symmetrically about its center until all
    sides equal the longest one. A zero-extent union gets a 1 mm cube.

    Returns:
        np.ndarray: shape (8, 3), corners in the module-level corner order
    """
    points = _stack(point_sets)
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    center = (lo + hi) / 2.0
    side = float(np.max(hi - lo))
    if side <= 0.0:
        side = MIN_CUBE_SIDE
    half = side / 2.0
    cube_lo = np.minimum(center - half, lo)
    cube_hi = np.maximum(center + half, hi)
    bits = np.array([[(k >> 2) & 1, (k >> 1) & 1, k & 1] for k in range(8)], dtype=bool)
    return np.where(bits, cube_hi, cube_lo)


def skeleton_center(skeleton: Skeleton) -> np.ndarray:
    return skeleton.joints.mean(axis=0)


def bone_lengths(skeleton: Skeleton) -> np.ndarray:
    idx = np.array(BONES)
    return np.linalg.norm(skeleton.joints[idx[:, 0]] - skeleton.joints[idx[:, 1]], axis=1)
