"""Unsupervised temporal consistency loss and its analytic gradient.

For a cloud P_t and predicted skeletons S_t, S_{t-1} with flow F = S_t - S_{t-1}:

    dyn = {j : min_i |S_t[j] - P_t[i]| < mu}
    sta = {j : min_i |S_t[j] - P_t[i]| > rho}
    l_dyn = mean_{j in dyn} max(0, eta - |F[j]|)
    l_sta = mean_{j in sta} |F[j]|
    l_con = l_dyn + l_sta

An empty set contributes 0. An empty cloud makes every joint static.
Gradients treat set membership as constant.
"""

import numpy as np

from config import UtclConfig
from geometry import NUM_JOINTS, PointCloud, Sequence, Skeleton, nearest_distances
from schemas import LossReport


class UtclError(ValueError):
    """Raised when loss inputs are inconsistent."""


def skeleton_flow(s_cur: Skeleton, s_prev: Skeleton) -> np.ndarray:
    return s_cur.joints - s_prev.joints


def _joint_distances(cloud: PointCloud, s_hat: Skeleton) -> np.ndarray:
    if len(cloud) == 0:
        return np.full(NUM_JOINTS, np.inf)
    return nearest_distances(s_hat.joints, cloud)


def dynamic_set(cloud: PointCloud, s_hat: Skeleton, mu: float) -> frozenset[int]:
    """Joints strictly closer than ``mu`` to some point; empty for an empty cloud."""
    return frozenset(int(j) for j in np.flatnonzero(_joint_distances(cloud, s_hat) < mu))


def static_set(cloud: PointCloud, s_hat: Skeleton, rho: float) -> frozenset[int]:
    """Joints strictly farther than ``rho`` from every point; all joints for an empty cloud."""
    return frozenset(int(j) for j in np.flatnonzero(_joint_distances(cloud, s_hat) > rho))


def _indices(index_set) -> np.ndarray:
    return np.array(sorted(index_set), dtype=int)


def dcl(flow: np.ndarray, dyn, eta: float) -> float:
    idx = _indices(dyn)
    if idx.size == 0:
        return 0.0
    norms = np.linalg.norm(np.asarray(flow)[idx], axis=1)
    return float(np.mean(np.maximum(0.0, eta - norms)))


def scl(flow: np.ndarray, sta) -> float:
    idx = _indices(sta)
    if idx.size == 0:
        return 0.0
    return float(np.mean(np.linalg.norm(np.asarray(flow)[idx], axis=1)))


def mse_loss(s_hat: Skeleton, s_gt: Skeleton) -> float:
    """Mean over all 15 x 3 coordinates of the squared difference."""
    return float(np.mean((s_hat.joints - s_gt.joints) ** 2))


def total_loss(l_lab: float, l_con: float, cfg: UtclConfig) -> float:
    return l_lab + cfg.lambda_con * l_con


def utcl_loss(
    cloud: PointCloud,
    s_hat_cur: Skeleton,
    s_hat_prev: Skeleton,
    cfg: UtclConfig,
    s_gt: Skeleton | None = None,
) -> LossReport:
    """Loss report for one adjacent frame pair; ``s_gt`` adds the supervised term."""
    flow = skeleton_flow(s_hat_cur, s_hat_prev)
    dyn = dynamic_set(cloud, s_hat_cur, cfg.mu)
    sta = static_set(cloud, s_hat_cur, cfg.rho)
    l_dyn = dcl(flow, dyn, cfg.eta)
    l_sta = scl(flow, sta)
    l_con = l_dyn + l_sta
    l_lab = None if s_gt is None else mse_loss(s_hat_cur, s_gt)
    return LossReport(
        l_dyn=l_dyn,
        l_sta=l_sta,
        l_con=l_con,
        l_lab=l_lab,
        l_total=total_loss(l_lab or 0.0, l_con, cfg),
        dyn_indices=sorted(dyn),
        sta_indices=sorted(sta),
    )


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    out = np.zeros_like(vectors)
    np.divide(vectors, norms, out=out, where=norms > 0)
    return out


def utcl_grad(
    cloud: PointCloud,
    s_hat_cur: Skeleton,
    s_hat_prev: Skeleton,
    cfg: UtclConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of l_con w.r.t. (s_hat_cur, s_hat_prev), each shape (15, 3).

    Subgradient conventions: a zero flow contributes a zero vector, and a
    hinge exactly at |F| = eta takes the inactive branch.
    """
    flow = skeleton_flow(s_hat_cur, s_hat_prev)
    units = _unit_rows(flow)
    norms = np.linalg.norm(flow, axis=1)
    grad_flow = np.zeros_like(flow)

    dyn = _indices(dynamic_set(cloud, s_hat_cur, cfg.mu))
    if dyn.size:
        active = dyn[norms[dyn] < cfg.eta]
        grad_flow[active] -= units[active] / dyn.size

    sta = _indices(static_set(cloud, s_hat_cur, cfg.rho))
    if sta.size:
        grad_flow[sta] += units[sta] / sta.size

    return grad_flow, -grad_flow


def sequence_consistency(
    cloud_seq: Sequence,
    pred_seq: Sequence,
    cfg: UtclConfig,
    gt_seq: Sequence | None = None,
) -> LossReport:
    """Mean of per-pair reports over every adjacent frame pair.

    Frame k of ``pred_seq`` (and ``gt_seq``) must share its timestep with
    frame k of ``cloud_seq``. Index sets are left empty in the aggregate.
    """
    if len(pred_seq) != len(cloud_seq):
        raise UtclError(f"prediction has {len(pred_seq)} frames, cloud sequence has {len(cloud_seq)}")
    if not pred_seq.is_labeled:
        raise UtclError("prediction sequence carries no skeletons")
    if gt_seq is not None and (len(gt_seq) != len(cloud_seq) or not gt_seq.is_labeled):
        raise UtclError("ground-truth sequence must be labeled and as long as the cloud sequence")
    for k, frame in enumerate(cloud_seq.frames):
        if pred_seq.frames[k].t != frame.t or (gt_seq is not None and gt_seq.frames[k].t != frame.t):
            raise UtclError(f"timestep mismatch at frame index {k}")
    if len(cloud_seq) < 2:
        raise UtclError("consistency needs at least two frames")

    reports = [
        utcl_loss(
            cloud_seq.frames[k].cloud,
            pred_seq.frames[k].skeleton,
            pred_seq.frames[k - 1].skeleton,
            cfg,
            None if gt_seq is None else gt_seq.frames[k].skeleton,
        )
        for k in range(1, len(cloud_seq))
    ]
    l_dyn = float(np.mean([r.l_dyn for r in reports]))
    l_sta = float(np.mean([r.l_sta for r in reports]))
    l_con = l_dyn + l_sta
    l_lab = None if gt_seq is None else float(np.mean([r.l_lab for r in reports]))
    return LossReport(
        l_dyn=l_dyn,
        l_sta=l_sta,
        l_con=l_con,
        l_lab=l_lab,
        l_total=total_loss(l_lab or 0.0, l_con, cfg),
        pairs=len(reports),
    )
