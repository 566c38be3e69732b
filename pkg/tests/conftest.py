"""Shared fixtures: skeleton/cloud builders and a synthetic arm-swing sequence."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from geometry import BONES, Frame, PointCloud, Sequence, Skeleton  # noqa: E402

# Standing pose in meters, canonical joint order, feet near z = 0.
REST_POSE = np.array([
    [0.00, 0.00, 1.00],   # pelvis
    [0.10, 0.00, 0.95],   # left_hip
    [0.10, 0.00, 0.50],   # left_knee
    [0.10, 0.00, 0.08],   # left_ankle
    [-0.10, 0.00, 0.95],  # right_hip
    [-0.10, 0.00, 0.50],  # right_knee
    [-0.10, 0.00, 0.08],  # right_ankle
    [0.00, 0.00, 1.50],   # neck
    [0.00, 0.00, 1.70],   # head
    [0.20, 0.00, 1.45],   # left_shoulder
    [0.20, 0.00, 1.18],   # left_elbow
    [0.20, 0.00, 0.92],   # left_wrist
    [-0.20, 0.00, 1.45],  # right_shoulder
    [-0.20, 0.00, 1.18],  # right_elbow
    [-0.20, 0.00, 0.92],  # right_wrist
])

UPPER_ARM = 0.27
FOREARM = 0.26


def arm_pose(angle: float) -> np.ndarray:
    """Rest pose with both arms rotated by ``angle`` about the shoulder axis (x)."""
    joints = REST_POSE.copy()
    direction = np.array([0.0, np.sin(angle), -np.cos(angle)])
    for shoulder, elbow, wrist, sign in ((9, 10, 11, 1.0), (12, 13, 14, -1.0)):
        d = direction * np.array([1.0, sign, 1.0])
        joints[elbow] = joints[shoulder] + UPPER_ARM * d
        joints[wrist] = joints[shoulder] + (UPPER_ARM + FOREARM) * d
    return joints


def body_cloud(joints: np.ndarray, n_points: int, gen: np.random.Generator, spread: float = 0.03) -> np.ndarray:
    """Points scattered along the bones of ``joints``."""
    bones = np.array(BONES)
    pick = gen.integers(0, len(bones), size=n_points)
    frac = gen.random(n_points)[:, None]
    start = joints[bones[pick, 0]]
    end = joints[bones[pick, 1]]
    return start + frac * (end - start) + gen.normal(scale=spread, size=(n_points, 3))


def make_arm_swing(frames: int = 100, n_points: int = 1024, seed: int = 0, name: str = "arm_swing") -> Sequence:
    """Arms circle at a constant 0.3 rad per frame; legs and torso stay still."""
    gen = np.random.default_rng(seed)
    out = []
    for t in range(frames):
        joints = arm_pose(0.3 * t)
        out.append(Frame(t=t, cloud=PointCloud(body_cloud(joints, n_points, gen)), skeleton=Skeleton(joints)))
    return Sequence(frames=tuple(out), source="lidar", frame_rate=10.0, name=name)


@pytest.fixture
def gen() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def rest_skeleton() -> Skeleton:
    return Skeleton(REST_POSE)


@pytest.fixture
def random_skeleton(gen):
    def build(scale: float = 1.0) -> Skeleton:
        return Skeleton(REST_POSE + gen.normal(scale=0.05 * scale, size=REST_POSE.shape))
    return build


@pytest.fixture
def random_cloud(gen):
    def build(n_points: int = 256, low: float = -1.0, high: float = 1.0) -> PointCloud:
        return PointCloud(gen.uniform(low, high, size=(n_points, 3)))
    return build


@pytest.fixture
def arm_swing():
    return make_arm_swing


@pytest.fixture(scope="module")
def arm_swing_sequence() -> Sequence:
    return make_arm_swing()
