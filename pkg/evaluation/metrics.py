"""Pose-error metrics: MPJPE and PA-MPJPE in centimeters.

Alignment is the closed-form similarity Procrustes solution (centroids,
cross-covariance SVD, determinant sign correction so the rotation is
always proper), computed per frame.

Example:
    >>> from evaluation.metrics import mpjpe, pa_mpjpe
    >>> mpjpe(pred, gt)      # cm
    >>> pa_mpjpe(pred, gt)   # cm, after aligning pred onto gt
"""

from dataclasses import dataclass

import numpy as np

from geometry import Sequence, Skeleton
from schemas import SequenceMetrics

METERS_TO_CM = 100.0
_MIN_VARIANCE = 1e-12


class MetricsError(ValueError):
    """Raised for degenerate skeletons or misaligned sequences."""


@dataclass(frozen=True, eq=False)
class SimilarityTransform:
    """x -> scale * rotation @ x + translation."""
    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * (np.asarray(points) @ self.rotation.T) + self.translation


def mpjpe(pred: Skeleton, gt: Skeleton) -> float:
    """Mean per-joint Euclidean error, in cm."""
    return float(np.mean(np.linalg.norm(pred.joints - gt.joints, axis=1)) * METERS_TO_CM)


def procrustes_align(pred: Skeleton, gt: Skeleton) -> SimilarityTransform:
    """Similarity transform minimizing sum_j |s R pred[j] + t - gt[j]|^2."""
    mu_pred = pred.joints.mean(axis=0)
    mu_gt = gt.joints.mean(axis=0)
    x = pred.joints - mu_pred
    y = gt.joints - mu_gt
    var_pred = float(np.sum(x ** 2))
    if var_pred < _MIN_VARIANCE or float(np.sum(y ** 2)) < _MIN_VARIANCE:
        raise MetricsError("degenerate skeleton for alignment")

    k = x.T @ y
    u, _, vh = np.linalg.svd(k)
    v = vh.T
    z = np.eye(3)
    z[-1, -1] = np.sign(np.linalg.det(u @ vh)) or 1.0
    rotation = v @ z @ u.T
    scale = float(np.trace(rotation @ k)) / var_pred
    translation = mu_gt - scale * rotation @ mu_pred
    return SimilarityTransform(scale=scale, rotation=rotation, translation=translation)


def pa_mpjpe(pred: Skeleton, gt: Skeleton) -> float:
    """MPJPE after Procrustes alignment of ``pred`` onto ``gt``, in cm."""
    aligned = procrustes_align(pred, gt).apply(pred.joints)
    return float(np.mean(np.linalg.norm(aligned - gt.joints, axis=1)) * METERS_TO_CM)


def sequence_metrics(pred_seq: Sequence, gt_seq: Sequence) -> SequenceMetrics:
    """Uniform average of per-frame MPJPE and PA-MPJPE."""
    if len(pred_seq) != len(gt_seq):
        raise MetricsError(f"prediction has {len(pred_seq)} frames, ground truth has {len(gt_seq)}")
    if len(gt_seq) == 0:
        raise MetricsError("cannot evaluate empty sequences")
    if not (pred_seq.is_labeled and gt_seq.is_labeled):
        raise MetricsError("both sequences must carry skeletons")
    errors = []
    aligned_errors = []
    for pred_frame, gt_frame in zip(pred_seq.frames, gt_seq.frames):
        if pred_frame.t != gt_frame.t:
            raise MetricsError(f"timestep mismatch: prediction t={pred_frame.t}, ground truth t={gt_frame.t}")
        errors.append(mpjpe(pred_frame.skeleton, gt_frame.skeleton))
        aligned_errors.append(pa_mpjpe(pred_frame.skeleton, gt_frame.skeleton))
    return SequenceMetrics(
        name=gt_seq.name,
        frames=len(errors),
        mpjpe_cm=float(np.mean(errors)),
        pa_mpjpe_cm=float(np.mean(aligned_errors)),
    )


def aggregate_metrics(reports: list[SequenceMetrics]) -> SequenceMetrics:
    """Frame-weighted mean over sequences (every frame counts once)."""
    if not reports:
        raise MetricsError("no sequences to aggregate")
    frames = sum(r.frames for r in reports)
    return SequenceMetrics(
        name="aggregate",
        frames=frames,
        mpjpe_cm=sum(r.mpjpe_cm * r.frames for r in reports) / frames,
        pa_mpjpe_cm=sum(r.pa_mpjpe_cm * r.frames for r in reports) / frames,
    )
