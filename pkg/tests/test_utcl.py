import numpy as np
import pytest

from config import UtclConfig
from geometry import Frame, PointCloud, Sequence, Skeleton, nearest_distances
from utcl import (
    UtclError,
    dcl,
    dynamic_set,
    mse_loss,
    scl,
    sequence_consistency,
    static_set,
    total_loss,
    utcl_grad,
    utcl_loss,
)

MARGIN = 1e-3
STEP = 1e-6


def random_configuration(gen: np.random.Generator, cfg: UtclConfig):
    """Cloud and skeleton pair with every threshold, and zero flow, at least MARGIN away."""
    while True:
        cloud = PointCloud(gen.uniform(-0.5, 0.5, size=(30, 3)))
        cur = gen.uniform(-0.6, 0.6, size=(15, 3))
        direction = gen.normal(size=(15, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        magnitude = gen.uniform(MARGIN, 0.1, size=(15, 1))
        prev = cur - direction * magnitude
        dist = nearest_distances(cur, cloud)
        norms = magnitude[:, 0]
        if np.min(np.abs(dist - cfg.mu)) < MARGIN or np.min(np.abs(dist - cfg.rho)) < MARGIN:
            continue
        if np.min(np.abs(norms - cfg.eta)) < MARGIN:
            continue
        grad_cur, _ = utcl_grad(cloud, Skeleton(cur), Skeleton(prev), cfg)
        if np.linalg.norm(grad_cur) == 0.0:
            continue
        return cloud, cur, prev


def numerical_gradient(fn, x: np.ndarray) -> np.ndarray:
    grad = np.zeros_like(x)
    for index in np.ndindex(*x.shape):
        plus = x.copy()
        minus = x.copy()
        plus[index] += STEP
        minus[index] -= STEP
        grad[index] = (fn(plus) - fn(minus)) / (2 * STEP)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b)))


class TestSets:
    def test_dynamic_and_static_thresholds(self):
        cloud = PointCloud([[0.0, 0.0, 0.0]])
        joints = np.zeros((15, 3))
        joints[:, 0] = np.linspace(0.0, 0.42, 15)  # 3 cm spacing
        skeleton = Skeleton(joints)
        dyn = dynamic_set(cloud, skeleton, 0.20)
        sta = static_set(cloud, skeleton, 0.05)
        assert dyn == frozenset(range(7))
        assert sta == frozenset(range(2, 15))

    def test_empty_cloud(self, rest_skeleton):
        empty = PointCloud([])
        assert dynamic_set(empty, rest_skeleton, 0.2) == frozenset()
        assert static_set(empty, rest_skeleton, 0.05) == frozenset(range(15))

    def test_empty_sets_contribute_zero(self):
        flow = np.ones((15, 3))
        assert dcl(flow, frozenset(), 0.05) == 0.0
        assert scl(flow, frozenset()) == 0.0


class TestHandCases:
    def test_embedded_static_prediction(self, rest_skeleton):
        """Cloud at the joints, no motion: every joint dynamic, hinge eta each."""
        cloud = PointCloud(rest_skeleton.joints)
        report = utcl_loss(cloud, rest_skeleton, rest_skeleton, UtclConfig())
        assert report.dyn_indices == list(range(15))
        assert report.sta_indices == []
        assert report.l_con == pytest.approx(0.05, abs=1e-15)
        assert f"{report.l_con:.6f}" == "0.050000"

    def test_far_static_prediction(self, rest_skeleton):
        cloud = PointCloud([[10.0, 10.0, 10.0]])
        report = utcl_loss(cloud, rest_skeleton, rest_skeleton, UtclConfig())
        assert report.dyn_indices == []
        assert report.sta_indices == list(range(15))
        assert report.l_con == 0.0

    def test_far_moving_prediction_pays_flow(self, rest_skeleton):
        cloud = PointCloud([[10.0, 10.0, 10.0]])
        moved = Skeleton(rest_skeleton.joints + [0.03, 0.0, 0.04])
        report = utcl_loss(cloud, moved, rest_skeleton, UtclConfig())
        assert report.l_sta == pytest.approx(0.05)
        assert report.l_dyn == 0.0

    def test_total_with_ground_truth(self, rest_skeleton):
        gt = Skeleton(rest_skeleton.joints + 0.01)
        cloud = PointCloud(rest_skeleton.joints)
        report = utcl_loss(cloud, rest_skeleton, rest_skeleton, UtclConfig(), s_gt=gt)
        assert report.l_lab == pytest.approx(1e-4)
        assert report.l_total == pytest.approx(report.l_lab + 0.01 * report.l_con)

    def test_total_weights_consistency(self):
        assert total_loss(0.2, 0.5, UtclConfig(lambda_con=0.1)) == pytest.approx(0.25)
        assert total_loss(0.0, 0.5, UtclConfig()) == pytest.approx(0.005)

    def test_mse_is_mean_over_coordinates(self, rest_skeleton):
        shifted = np.array(rest_skeleton.joints)
        shifted[0, 0] += 0.3
        assert mse_loss(Skeleton(shifted), rest_skeleton) == pytest.approx(0.09 / 45)

    def test_fast_joints_pay_no_hinge(self, rest_skeleton):
        cloud = PointCloud(rest_skeleton.joints)
        moved = Skeleton(rest_skeleton.joints + [0.0, 0.0, 0.06])
        report = utcl_loss(cloud, moved, rest_skeleton, UtclConfig())
        assert report.l_dyn == 0.0


class TestGradient:
    def test_matches_central_differences(self):
        """100 random non-degenerate configurations, relative error < 1e-6."""
        cfg = UtclConfig()
        gen = np.random.default_rng(2024)
        for _ in range(100):
            cloud, cur, prev = random_configuration(gen, cfg)
            grad_cur, grad_prev = utcl_grad(cloud, Skeleton(cur), Skeleton(prev), cfg)
            num_cur = numerical_gradient(
                lambda x: utcl_loss(cloud, Skeleton(x), Skeleton(prev), cfg).l_con, cur
            )
            num_prev = numerical_gradient(
                lambda x: utcl_loss(cloud, Skeleton(cur), Skeleton(x), cfg).l_con, prev
            )
            assert relative_error(grad_cur, num_cur) < 1e-6
            assert relative_error(grad_prev, num_prev) < 1e-6

    def test_gradients_are_opposite(self, rest_skeleton):
        cloud = PointCloud(rest_skeleton.joints[:5])
        moved = Skeleton(rest_skeleton.joints + 0.01)
        grad_cur, grad_prev = utcl_grad(cloud, moved, rest_skeleton, UtclConfig())
        np.testing.assert_array_equal(grad_cur, -grad_prev)

    def test_single_static_joint(self, rest_skeleton):
        """Only the head is off the cloud and moving: gradient is the unit flow on the head."""
        cfg = UtclConfig(mu=0.06)
        flow = np.array([0.0, 0.012, 0.016])
        cur = np.array(rest_skeleton.joints)
        cur[8] += flow
        cloud = PointCloud(np.delete(rest_skeleton.joints, 8, axis=0))
        grad_cur, grad_prev = utcl_grad(cloud, Skeleton(cur), rest_skeleton, cfg)
        expected = np.zeros((15, 3))
        expected[8] = flow / 0.02
        np.testing.assert_allclose(grad_cur, expected, atol=1e-12)
        np.testing.assert_allclose(grad_prev, -expected, atol=1e-12)

    def test_static_gradient_split_over_set(self, rest_skeleton):
        """Two static joints: each gets its unit flow divided by |sta| = 2."""
        cfg = UtclConfig(mu=0.06)
        head_flow = np.array([0.0, 0.012, 0.016])
        wrist_flow = np.array([0.0, 0.0, -0.01])
        cur = np.array(rest_skeleton.joints)
        cur[8] += head_flow
        cur[14] += wrist_flow
        cloud = PointCloud(np.delete(rest_skeleton.joints, [8, 14], axis=0))
        report = utcl_loss(cloud, Skeleton(cur), rest_skeleton, cfg)
        assert report.sta_indices == [8, 14]
        assert report.l_sta == pytest.approx(0.015)
        assert report.l_dyn == pytest.approx(0.05)
        grad_cur, _ = utcl_grad(cloud, Skeleton(cur), rest_skeleton, cfg)
        expected = np.zeros((15, 3))
        expected[8] = head_flow / 0.02 / 2
        expected[14] = wrist_flow / 0.01 / 2
        np.testing.assert_allclose(grad_cur, expected, atol=1e-12)

    def test_zero_flow_gives_zero_gradient(self, rest_skeleton):
        cloud = PointCloud(rest_skeleton.joints)
        grad_cur, _ = utcl_grad(cloud, rest_skeleton, rest_skeleton, UtclConfig())
        np.testing.assert_array_equal(grad_cur, 0.0)


class TestInvariances:
    def test_translation_invariant(self, gen):
        cfg = UtclConfig()
        cloud, cur, prev = random_configuration(gen, cfg)
        shift = np.array([1.5, -2.0, 0.7])
        base = utcl_loss(cloud, Skeleton(cur), Skeleton(prev), cfg)
        moved = utcl_loss(PointCloud(cloud.points + shift), Skeleton(cur + shift), Skeleton(prev + shift), cfg)
        assert moved.dyn_indices == base.dyn_indices
        assert moved.sta_indices == base.sta_indices
        assert moved.l_con == pytest.approx(base.l_con, abs=1e-12)

    def test_rotation_invariant(self, gen):
        """Same rotation on cloud and both skeletons keeps the sets and l_con."""
        cfg = UtclConfig()
        q, r = np.linalg.qr(gen.normal(size=(3, 3)))
        rotation = q * np.sign(np.diag(r))
        if np.linalg.det(rotation) < 0:
            rotation[:, 0] *= -1
        for _ in range(20):
            cloud, cur, prev = random_configuration(gen, cfg)
            base = utcl_loss(cloud, Skeleton(cur), Skeleton(prev), cfg)
            turned = utcl_loss(
                PointCloud(cloud.points @ rotation.T), Skeleton(cur @ rotation.T), Skeleton(prev @ rotation.T), cfg
            )
            assert turned.dyn_indices == base.dyn_indices
            assert turned.sta_indices == base.sta_indices
            assert turned.l_con == pytest.approx(base.l_con, abs=1e-12)

    def test_dynamic_term_bounded_by_eta(self, gen):
        """0 <= l_dyn <= eta and l_sta >= 0 for arbitrary clouds and flows."""
        cfg = UtclConfig()
        for _ in range(200):
            cloud = PointCloud(gen.uniform(-0.5, 0.5, size=(int(gen.integers(1, 40)), 3)))
            cur = gen.uniform(-0.6, 0.6, size=(15, 3))
            prev = cur + gen.normal(scale=float(gen.choice([0.0, 0.01, 0.1])), size=(15, 3))
            report = utcl_loss(cloud, Skeleton(cur), Skeleton(prev), cfg)
            assert 0.0 <= report.l_dyn <= cfg.eta
            assert report.l_sta >= 0.0

    def test_point_order_irrelevant(self, gen):
        cfg = UtclConfig()
        cloud, cur, prev = random_configuration(gen, cfg)
        shuffled = PointCloud(cloud.points[gen.permutation(len(cloud))])
        a = utcl_loss(cloud, Skeleton(cur), Skeleton(prev), cfg)
        b = utcl_loss(shuffled, Skeleton(cur), Skeleton(prev), cfg)
        assert a == b


class TestSequenceConsistency:
    def _sequences(self, arm_swing):
        observed = arm_swing(frames=6, n_points=64)
        clouds = observed.with_frames([Frame(f.t, f.cloud) for f in observed.frames])
        return clouds, observed

    def test_mean_over_pairs(self, arm_swing):
        clouds, pred = self._sequences(arm_swing)
        cfg = UtclConfig()
        report = sequence_consistency(clouds, pred, cfg)
        per_pair = [
            utcl_loss(clouds.frames[k].cloud, pred.frames[k].skeleton, pred.frames[k - 1].skeleton, cfg).l_con
            for k in range(1, 6)
        ]
        assert report.pairs == 5
        assert report.l_con == pytest.approx(np.mean(per_pair))
        assert report.l_lab is None

    def test_with_ground_truth(self, arm_swing):
        clouds, pred = self._sequences(arm_swing)
        report = sequence_consistency(clouds, pred, UtclConfig(), gt_seq=pred)
        assert report.l_lab == 0.0
        assert report.l_total == pytest.approx(0.01 * report.l_con)

    def test_misaligned_lengths(self, arm_swing):
        clouds, pred = self._sequences(arm_swing)
        with pytest.raises(UtclError, match="frames"):
            sequence_consistency(clouds, pred.with_frames(pred.frames[:4]), UtclConfig())

    def test_single_frame(self, arm_swing):
        clouds, pred = self._sequences(arm_swing)
        with pytest.raises(UtclError, match="two frames"):
            sequence_consistency(clouds.with_frames(clouds.frames[:1]), pred.with_frames(pred.frames[:1]), UtclConfig())

    def test_unlabeled_prediction(self, arm_swing):
        clouds, _ = self._sequences(arm_swing)
        with pytest.raises(UtclError, match="no skeletons"):
            sequence_consistency(clouds, clouds, UtclConfig())

    def test_timestep_mismatch(self, arm_swing):
        clouds, pred = self._sequences(arm_swing)
        shifted = Sequence(frames=tuple(Frame(f.t + 1, f.cloud, f.skeleton) for f in pred.frames))
        with pytest.raises(UtclError, match="timestep"):
            sequence_consistency(clouds, shifted, UtclConfig())
