import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linfb import (CircleTrajectory, IDTrackingController, JointState,
                   LinearFeedbackLaw, TaskGains, eval_law,
                   forward_kinematics, linearize_analytic, linearize_fd,
                   random_policy)
from linfb.controllers import MlpPolicy
from linfb.dynamics import DimensionMismatch
from linfb.linearize import LinearizationError

from conftest import random_state


class AffineController:
    def __init__(self, K, c):
        self.K = np.asarray(K, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.n = self.c.shape[0]

    def evaluate(self, x, t):
        return self.K @ x.x + self.c


class SineController:
    n = 1

    def evaluate(self, x, t):
        return np.array([math.sin(x.q[0])])


class NanController:
    n = 1

    def evaluate(self, x, t):
        return np.array([np.nan if x.q[0] > 0.05 else 0.0])


def test_eval_law_arithmetic():
    law = LinearFeedbackLaw(A=[[2.0, 3.0]], b=[1.0], x_k=[0.0, 0.0], t_k=0.0)
    np.testing.assert_array_equal(eval_law(law, [0.5, -1.0]), [-1.0])


def test_eval_law_zero_gain_returns_offset(rng):
    law = LinearFeedbackLaw(A=np.zeros((2, 4)), b=[0.3, -0.7],
                            x_k=np.zeros(4), t_k=0.0)
    for _ in range(5):
        np.testing.assert_array_equal(eval_law(law, rng.normal(size=4)),
                                      [0.3, -0.7])


def test_eval_law_dimension_check():
    law = LinearFeedbackLaw(A=np.zeros((2, 4)), b=np.zeros(2),
                            x_k=np.zeros(4), t_k=0.0)
    with pytest.raises(DimensionMismatch):
        eval_law(law, np.zeros(3))


def test_law_validation():
    with pytest.raises(DimensionMismatch):
        LinearFeedbackLaw(A=np.zeros((2, 3)), b=np.zeros(2),
                          x_k=np.zeros(4), t_k=0.0)
    with pytest.raises(LinearizationError):
        LinearFeedbackLaw(A=np.full((1, 2), np.nan), b=np.zeros(1),
                          x_k=np.zeros(2), t_k=0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 31), st.floats(1e-6, 1e-3))
def test_affine_exactness(n, seed, h):
    # central differences recover an affine controller's (K, c) exactly
    # for any anchor and any step size large enough that the difference
    # quotient itself is not dominated by rounding
    rng = np.random.default_rng(seed)
    K = rng.normal(size=(n, 2 * n))
    c = rng.normal(size=n)
    x_k = rng.normal(size=2 * n)
    law = linearize_fd(AffineController(K, c), x_k, t_k=0.0, h=h)
    np.testing.assert_allclose(law.A, K, rtol=0, atol=1e-8)
    np.testing.assert_allclose(law.b, c, rtol=0, atol=1e-8)


def test_sine_at_origin():
    law = linearize_fd(SineController(), np.zeros(2), t_k=0.0, h=1e-6)
    np.testing.assert_allclose(law.A, [[1.0, 0.0]], atol=1e-10)
    np.testing.assert_allclose(law.b, [0.0], atol=1e-12)


def test_anchor_identity_and_seq(model, rng):
    posture = np.array([0.0, 0.7, -1.4, 0.0, 0.7, -1.4])
    p0, _ = forward_kinematics(model, posture, "right_foot")
    traj = CircleTrajectory(center=p0, radius=0.05, omega=math.pi)
    ctrl = IDTrackingController(model, TaskGains.critically_damped(500.0),
                                traj, posture)
    s = JointState(posture + rng.normal(0, 0.1, 6), rng.normal(0, 0.3, 6))
    law = linearize_fd(ctrl, s, t_k=0.4, seq=17)
    assert law.seq == 17 and law.t_k == 0.4 and law.n == 6
    np.testing.assert_allclose(eval_law(law, s.x), ctrl.evaluate(s, 0.4),
                               atol=1e-12)


def test_richardson_refinement(model, rng):
    # halving h changes A only at the h^2 error scale
    posture = np.array([0.0, 0.7, -1.4, 0.0, 0.7, -1.4])
    p0, _ = forward_kinematics(model, posture, "right_foot")
    traj = CircleTrajectory(center=p0, radius=0.05, omega=math.pi)
    ctrl = IDTrackingController(model, TaskGains.critically_damped(500.0),
                                traj, posture)
    s = JointState(posture + rng.normal(0, 0.1, 6), rng.normal(0, 0.3, 6))
    coarse = linearize_fd(ctrl, s, t_k=0.2, h=1e-4)
    fine = linearize_fd(ctrl, s, t_k=0.2, h=5e-5)
    scale = np.max(np.abs(fine.A))
    assert np.max(np.abs(coarse.A - fine.A)) <= 1e-4 * scale


def test_first_order_residual_quarters(model, rng):
    posture = np.array([0.0, 0.7, -1.4, 0.0, 0.7, -1.4])
    p0, _ = forward_kinematics(model, posture, "right_foot")
    traj = CircleTrajectory(center=p0, radius=0.05, omega=math.pi)
    ctrl = IDTrackingController(model, TaskGains.critically_damped(500.0),
                                traj, posture)
    s = JointState(posture, np.zeros(6))
    law = linearize_fd(ctrl, s, t_k=0.0)
    dx = rng.normal(size=12)
    dx /= np.linalg.norm(dx)

    def residual(step):
        x = s.x + step * dx
        probe = JointState(x[:6], x[6:])
        return np.linalg.norm(ctrl.evaluate(probe, 0.0) - eval_law(law, x))

    ratio = residual(2e-3) / residual(1e-3)
    assert 3.0 <= ratio <= 5.0


def test_nonfinite_probe_reported():
    with pytest.raises(LinearizationError, match="coordinate 0"):
        linearize_fd(NanController(), np.zeros(2), t_k=0.0, h=0.1)
    with pytest.raises(LinearizationError, match="anchor"):
        linearize_fd(NanController(), np.array([1.0, 0.0]), t_k=0.0)


class TestAnalytic:
    def test_linear_policy_matches_fd(self, rng):
        n = 3
        W = rng.normal(size=(n, 2 * n + 3))
        b = rng.normal(size=n)
        policy = MlpPolicy([W], [b])
        s = random_state(rng, n)
        p_star = rng.normal(size=3)

        class Held:
            def evaluate(self, x, t):
                return policy.eval(x, p_star)

        ana = linearize_analytic(policy, s, p_star, t_k=0.0)
        fd = linearize_fd(Held(), s, t_k=0.0)
        np.testing.assert_allclose(ana.A, fd.A, atol=1e-12)
        np.testing.assert_allclose(ana.b, fd.b, atol=1e-12)

    def test_zero_policy(self):
        n = 2
        policy = MlpPolicy([np.zeros((n, 2 * n + 3))], [np.zeros(n)])
        law = linearize_analytic(policy, np.ones(2 * n), np.zeros(3), t_k=0.0)
        np.testing.assert_array_equal(law.A, np.zeros((n, 2 * n)))
        np.testing.assert_array_equal(law.b, np.zeros(n))

    def test_tanh_policy_cross_method(self, rng):
        for seed in range(5):
            policy = random_policy(seed, 6)
            s = random_state(rng, 6)
            p_star = rng.normal(size=3)

            class Held:
                def evaluate(self, x, t):
                    return policy.eval(x, p_star)

            ana = linearize_analytic(policy, s, p_star, t_k=0.0)
            fd = linearize_fd(Held(), s, t_k=0.0)
            assert np.max(np.abs(ana.A - fd.A)) <= 1e-5
            np.testing.assert_allclose(eval_law(ana, s.x),
                                       policy.eval(s, p_star), atol=1e-12)
