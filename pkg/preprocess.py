"""Training-time preprocessing chain.

Fixed order: normalize_sequence -> box_filter -> rigid_augment (optional)
-> resample_to_n. Every stochastic step takes an explicit SeededRng.
"""

from dataclasses import dataclass

import numpy as np

from config import PreprocessConfig
from geometry import Frame, PointCloud, Sequence, Skeleton
from seeded_rng import SeededRng


class PreprocessError(ValueError):
    """Raised when a preprocessing precondition is violated."""


@dataclass(frozen=True, eq=False)
class Normalization:
    """A normalized sequence plus the offset that was subtracted.

    Attributes:
        sequence: The shifted sequence
        offset: (median X, median Y, min Z) subtracted from every coordinate
        from_skeletons: True when the statistics came from skeleton joints,
            False for unlabeled input (statistics over cloud points)
    """
    sequence: Sequence
    offset: np.ndarray
    from_skeletons: bool

    def invert(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) + self.offset


def _map_points(seq: Sequence, fn) -> Sequence:
    frames = []
    for frame in seq.frames:
        skeleton = None if frame.skeleton is None else Skeleton(fn(frame.skeleton.joints))
        frames.append(Frame(t=frame.t, cloud=PointCloud(fn(frame.cloud.points)), skeleton=skeleton))
    return seq.with_frames(frames)


def normalize_sequence(seq: Sequence) -> Normalization:
    """Subtract (median X, median Y, min Z) computed over the whole sequence.

    Labeled sequences use every skeleton joint; unlabeled ones fall back to
    every cloud point.
    """
    if len(seq) == 0:
        raise PreprocessError("cannot normalize an empty sequence")
    if seq.is_labeled:
        stats = np.vstack([f.skeleton.joints for f in seq.frames])
    else:
        stats = np.vstack([f.cloud.points for f in seq.frames])
        if stats.shape[0] == 0:
            raise PreprocessError("cannot normalize an unlabeled sequence without points")
    offset = np.array([np.median(stats[:, 0]), np.median(stats[:, 1]), np.min(stats[:, 2])])
    shifted = _map_points(seq, lambda pts: pts - offset)
    return Normalization(sequence=shifted, offset=offset, from_skeletons=seq.is_labeled)


def box_filter(cloud: PointCloud, cfg: PreprocessConfig) -> PointCloud:
    """Keep points with |x|, |y| <= box_xy_half and box_z_min <= z <= box_z_max (inclusive)."""
    pts = cloud.points
    keep = (
        (np.abs(pts[:, 0]) <= cfg.box_xy_half)
        & (np.abs(pts[:, 1]) <= cfg.box_xy_half)
        & (pts[:, 2] >= cfg.box_z_min)
        & (pts[:, 2] <= cfg.box_z_max)
    )
    return PointCloud(pts[keep])


def apply_similarity(seq: Sequence, angle_rad: float, scale: float, translation) -> Sequence:
    """Apply p -> scale * Rz(angle) p + translation to every point and joint."""
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    rotation = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    shift = np.asarray(translation, dtype=np.float64)
    return _map_points(seq, lambda pts: scale * (pts @ rotation.T) + shift)


def rigid_augment(seq: Sequence, cfg: PreprocessConfig, rng: SeededRng) -> Sequence:
    """Draw one rotation about Z, one scale and one translation for the whole clip."""
    gen = rng.generator()
    angle = np.deg2rad(gen.uniform(-cfg.rot_max_deg, cfg.rot_max_deg))
    scale = gen.uniform(cfg.scale_min, cfg.scale_max)
    translation = gen.uniform(-cfg.trans_max, cfg.trans_max, size=3)
    return apply_similarity(seq, angle, scale, translation)


def resample_to_n(cloud: PointCloud, n: int, rng: SeededRng) -> PointCloud:
    """Exactly ``n`` points: ordered random subset when M > n, cyclic repeat when M < n."""
    m = len(cloud)
    if m == 0:
        raise PreprocessError("cannot resample empty cloud")
    if m == n:
        return cloud
    if m > n:
        idx = np.sort(rng.generator().choice(m, size=n, replace=False))
    else:
        idx = np.arange(n) % m
    return PointCloud(cloud.points[idx])


def height_features(cloud: PointCloud) -> np.ndarray:
    """Per-point height feature (the z coordinate), shape (M, 1)."""
    return cloud.points[:, 2:3].copy()


def sliding_windows(seq: Sequence, length: int = 5) -> list[Sequence]:
    """All runs of ``length`` consecutive frames, in order."""
    if length < 1:
        raise PreprocessError(f"window length must be >= 1, got {length}")
    return [seq.with_frames(seq.frames[i:i + length]) for i in range(len(seq) - length + 1)]


def preprocess_sequence(
    seq: Sequence,
    cfg: PreprocessConfig,
    rng: SeededRng,
    augment: bool = False,
) -> Normalization:
    """Run the full chain; the returned offset maps outputs back to sensor frame
    (before augmentation)."""
    norm = normalize_sequence(seq)
    filtered = []
    for frame in norm.sequence.frames:
        cloud = box_filter(frame.cloud, cfg)
        if len(cloud) == 0:
            raise PreprocessError(f"frame t={frame.t}: box filter removed every point")
        filtered.append(Frame(t=frame.t, cloud=cloud, skeleton=frame.skeleton))
    clip = norm.sequence.with_frames(filtered)
    if augment:
        clip = rigid_augment(clip, cfg, rng.child(seq.name, "augment"))
    frames = [
        Frame(
            t=frame.t,
            cloud=resample_to_n(frame.cloud, cfg.target_points, rng.child(seq.name, frame.t, "resample")),
            skeleton=frame.skeleton,
        )
        for frame in clip.frames
    ]
    return Normalization(sequence=clip.with_frames(frames), offset=norm.offset, from_skeletons=norm.from_skeletons)
