"""Closed-form LiDAR -> mmWave point-cloud conversion.

Per frame the stages run in the order NPA -> FPF -> RS -> NI:

- NPA (noisy point addition): with probability p, append n Gaussian points
  around the skeleton center.
- FPF (flow-based point filtering): interpolate a flow for every point from
  the skeleton flow (15 joints + 8 static bounding-cube vertices, inverse
  distance weighting), then keep each point with probability
  min(|flow| / nu, 1), nu ~ U[gamma, delta] drawn once per frame.
- RS (random sampling): keep an ordered random fraction r ~ U[r_min, r_max]
  of clouds with at least m points.
- NI (noise injection): add isotropic Gaussian noise to every point.

The first frame has no predecessor and skips FPF. Randomness is keyed by
(sequence name, frame t, stage), so frames can be converted in any order.

Example:
    >>> from conversion import convert_sequence
    >>> converted = convert_sequence(lidar_seq, ConversionConfig(), SeededRng(7))
"""

from dataclasses import dataclass

import numpy as np

from config import ConversionConfig
from geometry import (
    NUM_EXTENDED,
    FlowField,
    Frame,
    PointCloud,
    Sequence,
    bounding_cube,
    skeleton_center,
)
from seeded_rng import SeededRng

FLOW_HIST_EDGES_M = (0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.075, 0.10, 0.15, 0.20, np.inf)


class ConversionError(ValueError):
    """Raised when conversion preconditions are violated."""


@dataclass(frozen=True, eq=False)
class ExtendedSkeletonFlow:
    """Interpolation sources: 15 joints then 8 cube vertices (zero flow)."""
    positions: np.ndarray
    flows: np.ndarray

    def __post_init__(self) -> None:
        for name in ("positions", "flows"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (NUM_EXTENDED, 3):
                raise ConversionError(f"extended skeleton {name} must have shape ({NUM_EXTENDED}, 3)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class FrameTrace:
    """What happened to one frame; feeds the stage sidecar and diagnostics.

    Attributes:
        t: Frame timestep
        counts: Point count after each of "input", "npa", "fpf", "rs", "ni"
        nu: Sampled flow threshold, None when FPF did not run
        flow_magnitudes: Interpolated flow magnitude of every pre-FPF point
        kept_mask: Which pre-FPF points FPF retained
    """
    t: int
    counts: dict[str, int]
    nu: float | None = None
    flow_magnitudes: np.ndarray | None = None
    kept_mask: np.ndarray | None = None

    def flow_histogram(self) -> list[int]:
        if self.flow_magnitudes is None:
            return []
        hist, _ = np.histogram(self.flow_magnitudes, bins=np.asarray(FLOW_HIST_EDGES_M))
        return hist.astype(int).tolist()


def npa(cloud: PointCloud, skeleton, cfg: ConversionConfig, rng: SeededRng) -> PointCloud:
    """Noisy point addition: one Bernoulli(p) draw, then n points from N(C, sigma1^2 I)."""
    if skeleton is None:
        raise ConversionError("conversion requires skeleton labels")
    gen = rng.generator()
    if not gen.random() < cfg.npa_prob:
        return cloud
    noise = gen.normal(loc=skeleton_center(skeleton), scale=cfg.npa_sigma, size=(cfg.npa_count, 3))
    return PointCloud(np.vstack([cloud.points, noise]))


def extended_skeleton_flow(prev: Frame, cur: Frame) -> ExtendedSkeletonFlow:
    """Current joints + cube vertices, with joint displacements and zero vertex flow.

    The cube encloses joints and clouds of both frames, so its vertices are
    the same at t-1 and t.
    """
    if prev.skeleton is None or cur.skeleton is None:
        raise ConversionError("conversion requires skeleton labels")
    if prev.t >= cur.t:
        raise ConversionError(f"previous frame t={prev.t} must precede t={cur.t}")
    cube = bounding_cube(prev.skeleton, cur.skeleton, prev.cloud, cur.cloud)
    positions = np.vstack([cur.skeleton.joints, cube])
    flows = np.vstack([cur.skeleton.joints - prev.skeleton.joints, np.zeros((8, 3))])
    return ExtendedSkeletonFlow(positions=positions, flows=flows)


def idw_weights(points: np.ndarray, sources: np.ndarray, epsilon: float) -> np.ndarray:
    """Normalized inverse-distance weights, shape (M, S); each row sums to 1."""
    dist = np.linalg.norm(points[:, None, :] - sources[None, :, :], axis=2)
    raw = 1.0 / (dist + epsilon)
    return raw / raw.sum(axis=1, keepdims=True)


def interpolate_point_flow(cloud: PointCloud, ext: ExtendedSkeletonFlow, epsilon: float = 1e-6) -> FlowField:
    if len(cloud) == 0:
        raise ConversionError("cannot interpolate flow for an empty cloud")
    weights = idw_weights(cloud.points, ext.positions, epsilon)
    return FlowField(weights @ ext.flows)


def sample_flow_threshold(cfg: ConversionConfig, rng: SeededRng) -> float:
    return float(rng.generator().uniform(cfg.fpf_gamma, cfg.fpf_delta))


def fpf_keep_mask(flow: FlowField, nu: float, rng: SeededRng) -> np.ndarray:
    """Bernoulli keep decisions with probability min(|flow| / nu, 1).

    If nothing survives, the largest-flow point (lowest index on ties) is kept.
    """
    if nu <= 0:
        raise ConversionError(f"flow threshold must be > 0, got {nu}")
    magnitudes = flow.magnitudes()
    prob = np.minimum(magnitudes / nu, 1.0)
    keep = rng.generator().random(len(flow)) < prob
    if len(flow) and not keep.any():
        keep[int(np.argmax(magnitudes))] = True
    return keep


def fpf(cloud: PointCloud, flow: FlowField, nu: float, rng: SeededRng) -> PointCloud:
    """Flow-based point filtering; order preserved, points never moved."""
    if len(flow) != len(cloud):
        raise ConversionError(f"flow length {len(flow)} does not match cloud length {len(cloud)}")
    return PointCloud(cloud.points[fpf_keep_mask(flow, nu, rng)])


def random_sample(cloud: PointCloud, cfg: ConversionConfig, rng: SeededRng) -> PointCloud:
    """Keep an ordered random subset of max(1, floor(r * M)) points when M >= m."""
    m = len(cloud)
    if m < cfg.rs_min_points or m == 0:
        return cloud
    gen = rng.generator()
    ratio = gen.uniform(cfg.rs_rmin, cfg.rs_rmax)
    k = max(1, int(np.floor(ratio * m)))
    if k >= m:
        return cloud
    idx = np.sort(gen.choice(m, size=k, replace=False))
    return PointCloud(cloud.points[idx])


def noise_inject(cloud: PointCloud, cfg: ConversionConfig, rng: SeededRng) -> PointCloud:
    noise = rng.generator().normal(loc=0.0, scale=cfg.ni_sigma, size=cloud.points.shape)
    return PointCloud(cloud.points + noise)


def convert_frame(
    prev: Frame | None,
    cur: Frame,
    cfg: ConversionConfig,
    rng: SeededRng,
) -> tuple[Frame, FrameTrace]:
    """Convert one frame given the previous original frame (None for the first)."""
    if cur.skeleton is None:
        raise ConversionError("conversion requires skeleton labels")
    stages = cfg.stages
    counts = {"input": len(cur.cloud)}
    cloud = cur.cloud
    if stages.npa:
        cloud = npa(cloud, cur.skeleton, cfg, rng.child("npa"))
    counts["npa"] = len(cloud)

    nu = None
    magnitudes = None
    kept = None
    if stages.fpf and prev is not None and len(cloud) > 0:
        ext = extended_skeleton_flow(prev, cur)
        flow = interpolate_point_flow(cloud, ext, cfg.idw_epsilon)
        nu = sample_flow_threshold(cfg, rng.child("nu"))
        kept = fpf_keep_mask(flow, nu, rng.child("fpf"))
        magnitudes = flow.magnitudes()
        cloud = PointCloud(cloud.points[kept])
    counts["fpf"] = len(cloud)

    if stages.rs:
        cloud = random_sample(cloud, cfg, rng.child("rs"))
    counts["rs"] = len(cloud)

    if stages.ni:
        cloud = noise_inject(cloud, cfg, rng.child("ni"))
    counts["ni"] = len(cloud)

    trace = FrameTrace(t=cur.t, counts=counts, nu=nu, flow_magnitudes=magnitudes, kept_mask=kept)
    return Frame(t=cur.t, cloud=cloud, skeleton=cur.skeleton), trace


def convert_sequence_traced(
    seq: Sequence,
    cfg: ConversionConfig,
    rng: SeededRng,
) -> tuple[Sequence, list[FrameTrace]]:
    """Convert every frame and keep a per-frame trace.

    Each frame draws from ``rng.child(seq.name, t, stage)``, so the result is
    a pure function of (sequence, config, seed).
    """
    if len(seq) == 0:
        raise ConversionError("cannot convert an empty sequence")
    if seq.source != "lidar":
        raise ConversionError(f"conversion requires a lidar sequence, got source {seq.source!r}")
    if not seq.is_labeled:
        raise ConversionError("conversion requires skeleton labels")
    frames = []
    traces = []
    prev = None
    for frame in seq.frames:
        converted, trace = convert_frame(prev, frame, cfg, rng.child(seq.name, frame.t))
        frames.append(converted)
        traces.append(trace)
        prev = frame
    return seq.with_frames(frames, source="converted"), traces


def convert_sequence(seq: Sequence, cfg: ConversionConfig, rng: SeededRng) -> Sequence:
    converted, _ = convert_sequence_traced(seq, cfg, rng)
    return converted
