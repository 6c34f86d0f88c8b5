import math

import numpy as np
import pytest

from linfb import (CircleTrajectory, IDTrackingController, JointState,
                   MlpPolicy, MlpPolicyController, TaskGains, circle_ref,
                   forward_dynamics, forward_kinematics, frame_jacobian,
                   frame_velocity, inverse_dynamics, jdot_v, mlp_eval,
                   mlp_state_jacobian, random_policy)
from linfb.dynamics import DimensionMismatch

from conftest import random_state


def make_circle(center, radius=0.05, omega=math.pi, phase=0.0):
    return CircleTrajectory(center=center, radius=radius, omega=omega,
                            phase=phase)


class TestCircleTrajectory:
    def test_values_at_time_zero(self):
        traj = make_circle(np.array([0.1, 0.2, 0.3]), radius=0.5, omega=2.0)
        p, pd, pdd = circle_ref(traj, 0.0)
        np.testing.assert_allclose(p, traj.center + 0.5 * traj.u, atol=1e-15)
        np.testing.assert_allclose(pd, 0.5 * 2.0 * traj.w, atol=1e-15)
        np.testing.assert_allclose(pdd, -0.5 * 4.0 * traj.u, atol=1e-15)

    def test_stationary_when_omega_zero(self):
        traj = make_circle(np.zeros(3), omega=0.0)
        for t in (0.0, 0.7, 12.0):
            p, pd, pdd = traj.ref(t)
            np.testing.assert_array_equal(pd, np.zeros(3))
            np.testing.assert_array_equal(pdd, np.zeros(3))
            np.testing.assert_allclose(p, traj.position(0.0), atol=1e-15)

    def test_constant_radius(self, rng):
        traj = make_circle(np.array([1.0, -2.0, 0.5]), radius=0.07)
        for t in rng.uniform(0, 10, 25):
            assert abs(np.linalg.norm(traj.position(t) - traj.center)
                       - 0.07) <= 1e-12

    def test_derivative_consistency(self, rng):
        traj = make_circle(np.zeros(3), radius=0.3, omega=1.7, phase=0.4)
        eps = 1e-6
        for t in rng.uniform(0, 5, 10):
            p1, pd1, pdd1 = traj.ref(t - eps)
            p2, pd2, pdd2 = traj.ref(t + eps)
            _, pd, pdd = traj.ref(t)
            assert np.max(np.abs((p2 - p1) / (2 * eps) - pd)) <= 1e-6
            assert np.max(np.abs((pd2 - pd1) / (2 * eps) - pdd)) <= 1e-6

    def test_rejects_bad_plane(self):
        with pytest.raises(ValueError):
            CircleTrajectory(center=np.zeros(3), radius=0.1, omega=1.0,
                             u=np.array([1.0, 0, 0]), w=np.array([1.0, 0, 0]))
        with pytest.raises(ValueError):
            CircleTrajectory(center=np.zeros(3), radius=0.0, omega=1.0)


class TestTaskGains:
    def test_critically_damped_exact(self):
        for kp in (100.0, 500.0, 2000.0):
            g = TaskGains.critically_damped(kp)
            np.testing.assert_array_equal(g.kd, np.sqrt(2.0 * g.kp))
        g = TaskGains.critically_damped(500.0)
        np.testing.assert_allclose(g.kd, math.sqrt(1000.0))
        assert abs(g.kd[0] - 31.6228) < 1e-3

    def test_broadcasting(self):
        g = TaskGains(kp=[100, 200, 300], kd=20.0)
        assert g.kp.shape == (3,) and g.kd.shape == (3,)
        np.testing.assert_array_equal(g.kd, [20.0, 20.0, 20.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            TaskGains(kp=0.0, kd=1.0)
        with pytest.raises(ValueError):
            TaskGains(kp=1.0, kd=1.0, pinv_damping=-1e-9)


def dls_tracking_oracle(model, q, v, t, gains, traj, posture, kp_post,
                        frame="right_foot"):
    """Independent assembly of the tracking torque from the public
    dynamics operations."""
    p, pd = frame_velocity(model, q, v, frame)
    J = frame_jacobian(model, q, frame)
    drift = jdot_v(model, q, v, frame)
    p_star, pd_star, pdd_star = traj.ref(t)
    pdd_cmd = pdd_star + gains.kp * (p_star - p) + gains.kd * (pd_star - pd)
    JJt = J @ J.T + gains.pinv_damping * np.eye(3)
    a_task = J.T @ np.linalg.solve(JJt, pdd_cmd - drift)
    kd_post = math.sqrt(2 * kp_post) if kp_post > 0 else 0.0
    a_null = kp_post * (posture - q) - kd_post * v
    a = a_task + a_null - J.T @ np.linalg.solve(JJt, J @ a_null)
    return inverse_dynamics(model, q, v, a)


class TestIDTrackingController:
    def test_on_reference_is_pure_compensation(self, model):
        q = np.array([0.0, 0.7, -1.4, 0.0, 0.7, -1.4])
        p0, _ = forward_kinematics(model, q, "right_foot")
        traj = CircleTrajectory(center=p0 - 0.05 * np.array([1.0, 0, 0]),
                                radius=0.05, omega=0.0)
        gains = TaskGains.critically_damped(500.0, pinv_damping=0.0)
        ctrl = IDTrackingController(model, gains, traj, posture=q)
        tau = ctrl.evaluate(JointState(q, np.zeros(model.n)), t=0.3)
        ref = inverse_dynamics(model, q, np.zeros(model.n), np.zeros(model.n))
        np.testing.assert_allclose(tau, ref, atol=1e-12)

    def test_matches_independent_assembly(self, model, rng):
        posture = np.array([0.0, 0.7, -1.4, 0.0, 0.7, -1.4])
        p0, _ = forward_kinematics(model, posture, "right_foot")
        traj = make_circle(p0)
        gains = TaskGains(kp=[400.0, 500.0, 600.0], kd=30.0,
                          pinv_damping=1e-4, posture_gain=10.0)
        ctrl = IDTrackingController(model, gains, traj, posture=posture)
        for _ in range(10):
            s = JointState(posture + rng.normal(0, 0.2, model.n),
                           rng.normal(0, 0.5, model.n))
            t = rng.uniform(0, 2)
            tau = ctrl.evaluate(s, t)
            ref = dls_tracking_oracle(model, s.q, s.v, t, gains, traj,
                                      posture, 10.0)
            assert np.max(np.abs(tau - ref)) <= 1e-9 * (1 + np.max(np.abs(ref)))

    def test_task_space_consistency(self, model, rng):
        # with lambda = 0 and full-rank J the commanded task acceleration
        # is realized exactly: J a + Jdot v = pdd_cmd
        posture = np.array([0.0, 0.7, -1.4, 0.0, 0.7, -1.4])
        p0, _ = forward_kinematics(model, posture, "right_foot")
        traj = make_circle(p0)
        gains = TaskGains.critically_damped(500.0, pinv_damping=0.0)
        ctrl = IDTrackingController(model, gains, traj, posture=posture)
        for _ in range(5):
            s = JointState(posture + rng.normal(0, 0.15, model.n),
                           rng.normal(0, 0.4, model.n))
            t = rng.uniform(0, 2)
            tau = ctrl.evaluate(s, t)
            a = forward_dynamics(model, s.q, s.v, tau)
            p, pd = frame_velocity(model, s.q, s.v, "right_foot")
            ps, pds, pdds = traj.ref(t)
            pdd_cmd = pdds + gains.kp * (ps - p) + gains.kd * (pds - pd)
            real = frame_jacobian(model, s.q, "right_foot") @ a \
                + jdot_v(model, s.q, s.v, "right_foot")
            assert np.linalg.norm(real - pdd_cmd) <= 1e-9

    def test_pendulum_hand_formula(self, dyn_pendulum):
        # 1-DoF chain: a = J^T (J J^T + lam I)^-1 Kp e, tau = m l^2 a + g-term
        q, lam = 0.3, 1e-6
        p0, _ = forward_kinematics(dyn_pendulum, [q], "tip")
        target = p0 + np.array([0.0, 0.0, 0.02])
        traj = CircleTrajectory(center=target - 0.05 * np.array([1.0, 0, 0]),
                                radius=0.05, omega=0.0)
        gains = TaskGains(kp=500.0, kd=1.0, pinv_damping=lam,
                          posture_gain=0.0)
        ctrl = IDTrackingController(dyn_pendulum, gains, traj, posture=[q],
                                    frame="tip")
        tau = ctrl.evaluate(JointState([q], [0.0]), 0.0)
        J = frame_jacobian(dyn_pendulum, [q], "tip")
        e = target - p0
        a = J.T @ np.linalg.solve(J @ J.T + lam * np.eye(3), 500.0 * e)
        expected = a[0] + 9.81 * math.cos(q)
        np.testing.assert_allclose(tau, [expected], atol=1e-9)


def reference_mlp(weights, biases, offset, scale, z):
    """Straight-line reimplementation of the forward pass."""
    h = (np.asarray(z, dtype=float) - offset) * scale
    for k, (W, b) in enumerate(zip(weights, biases)):
        h = W @ h + b
        if k < len(weights) - 1:
            h = np.tanh(h)
    return h


class TestMlpPolicy:
    def test_zero_weights(self):
        n = 2
        policy = MlpPolicy([np.zeros((4, 2 * n + 3)), np.zeros((n, 4))],
                           [np.zeros(4), np.zeros(n)])
        s = JointState(np.ones(n), np.ones(n))
        np.testing.assert_array_equal(mlp_eval(policy, s, np.ones(3)),
                                      np.zeros(n))
        np.testing.assert_array_equal(mlp_state_jacobian(policy, s, np.ones(3)),
                                      np.zeros((n, 2 * n)))

    def test_single_linear_layer(self, rng):
        n = 3
        W = rng.normal(size=(n, 2 * n + 3))
        b = rng.normal(size=n)
        policy = MlpPolicy([W], [b])
        s = random_state(rng, n)
        z = np.concatenate([s.q, s.v, [0.1, 0.2, 0.3]])
        np.testing.assert_allclose(mlp_eval(policy, s, [0.1, 0.2, 0.3]),
                                   W @ z + b, atol=1e-14)
        np.testing.assert_array_equal(
            mlp_state_jacobian(policy, s, [0.1, 0.2, 0.3]), W[:, :2 * n])

    def test_forward_matches_reference(self, rng):
        for seed in range(5):
            policy = random_policy(seed, 6)
            s = random_state(rng, 6)
            p_star = rng.normal(size=3)
            z = np.concatenate([s.q, s.v, p_star])
            ref = reference_mlp(policy.weights, policy.biases, policy.offset,
                                policy.scale, z)
            np.testing.assert_allclose(mlp_eval(policy, s, p_star), ref,
                                       atol=1e-12)

    def test_jacobian_matches_finite_differences(self, rng):
        h = 1e-5
        for seed in range(5):
            policy = random_policy(seed, 6)
            s = random_state(rng, 6)
            p_star = rng.normal(size=3)
            J = mlp_state_jacobian(policy, s, p_star)
            x = s.x
            for j in range(12):
                xp, xm = x.copy(), x.copy()
                xp[j] += h
                xm[j] -= h
                col = (policy.eval(JointState(xp[:6], xp[6:]), p_star)
                       - policy.eval(JointState(xm[:6], xm[6:]), p_star)) \
                    / (2 * h)
                assert np.max(np.abs(J[:, j] - col)) <= 1e-5

    def test_input_dim_checked(self):
        policy = random_policy(0, 6)
        with pytest.raises(DimensionMismatch):
            policy.eval(JointState(np.zeros(2), np.zeros(2)), np.zeros(3))

    def test_layer_validation(self):
        with pytest.raises(ValueError):
            MlpPolicy([np.zeros((4, 15))], [np.zeros(3)])  # bias mismatch
        with pytest.raises(ValueError):
            MlpPolicy([np.zeros((4, 15)), np.zeros((6, 5))],
                      [np.zeros(4), np.zeros(6)])  # chain mismatch
        with pytest.raises(ValueError):
            MlpPolicy([np.full((6, 15), np.nan)], [np.zeros(6)])

    def test_random_policy_deterministic(self):
        a = random_policy(11, 6)
        b = random_policy(11, 6)
        for Wa, Wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(Wa, Wb)

    def test_controller_adapter_samples_reference(self, rng):
        policy = random_policy(3, 6)
        traj = make_circle(np.array([0.0, -0.1, -0.3]))
        ctrl = MlpPolicyController(policy, traj)
        s = random_state(rng, 6)
        np.testing.assert_array_equal(
            ctrl.evaluate(s, 0.25), policy.eval(s, traj.position(0.25)))
