"""Torque controllers: task-space inverse-dynamics tracking and an MLP
torque policy, plus the circular task reference.

Controllers are immutable after construction; ``evaluate`` is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import _kernels as K
from .dynamics import DimensionMismatch, JointState, RobotModel


class TorqueController(Protocol):
    """Time- and state-dependent torque map tau(x; t)."""

    n: int

    def evaluate(self, x: JointState, t: float) -> np.ndarray: ...

    @property
    def state_dimension(self) -> int: ...


@dataclass(frozen=True)
class CircleTrajectory:
    """Circular task reference p*(t) = c + R(cos(wt+phi) u + sin(wt+phi) w)."""

    center: np.ndarray
    radius: float
    omega: float                      # rad/s
    u: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    w: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center",
                           np.asarray(self.center, dtype=float).reshape(3))
        u = np.asarray(self.u, dtype=float).reshape(3)
        w = np.asarray(self.w, dtype=float).reshape(3)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "w", w)
        if not self.radius > 0:
            raise ValueError("radius must be > 0")
        if (abs(np.linalg.norm(u) - 1) > 1e-12
                or abs(np.linalg.norm(w) - 1) > 1e-12
                or abs(u @ w) > 1e-12):
            raise ValueError("u, w must be an orthonormal pair")

    def ref(self, t: float):
        """Position, velocity, acceleration of the reference at time t."""
        a = self.omega * t + self.phase
        c, s = math.cos(a), math.sin(a)
        p = self.center + self.radius * (c * self.u + s * self.w)
        pd = self.radius * self.omega * (-s * self.u + c * self.w)
        pdd = -self.radius * self.omega ** 2 * (c * self.u + s * self.w)
        return p, pd, pdd

    def position(self, t: float) -> np.ndarray:
        return self.ref(t)[0]


def circle_ref(traj: CircleTrajectory, t: float):
    return traj.ref(t)


@dataclass(frozen=True)
class TaskGains:
    """Task-space PD gains plus redundancy-resolution parameters."""

    kp: np.ndarray                    # s^-2, per task axis
    kd: np.ndarray                    # s^-1
    pinv_damping: float = 1e-4        # Tikhonov term added to J J^T
    posture_gain: float = 10.0        # s^-2, nullspace PD stiffness

    def __post_init__(self):
        kp = np.broadcast_to(np.asarray(self.kp, dtype=float), (3,)).copy()
        kd = np.broadcast_to(np.asarray(self.kd, dtype=float), (3,)).copy()
        object.__setattr__(self, "kp", kp)
        object.__setattr__(self, "kd", kd)
        if not (np.all(kp > 0) and np.all(kd > 0)):
            raise ValueError("kp and kd must be > 0")
        if self.pinv_damping < 0:
            raise ValueError("pinv_damping must be >= 0")

    @classmethod
    def critically_damped(cls, kp, **kw) -> "TaskGains":
        """Gains with kd = sqrt(2 kp), exactly."""
        kp = np.broadcast_to(np.asarray(kp, dtype=float), (3,))
        return cls(kp=kp, kd=np.sqrt(2.0 * kp), **kw)


class IDTrackingController:
    """Instantaneous task-space tracker: tau = ID(q, v, a*) where a*
    realizes pdd* + Kp(p* - p) + Kd(pd* - pd) through the frame Jacobian
    (damped least squares, nullspace PD toward a rest posture)."""

    def __init__(self, model: RobotModel, gains: TaskGains,
                 traj: CircleTrajectory, posture, frame: str = "right_foot"):
        self.model = model
        self.gains = gains
        self.traj = traj
        self.frame = frame
        self.posture = model.check_q(posture)
        self.n = model.n
        self._f = model.frame(frame)
        # nullspace PD critically damped at the posture gain
        self._kp_post = float(gains.posture_gain)
        self._kd_post = math.sqrt(2.0 * self._kp_post) if self._kp_post > 0 else 0.0

    @property
    def state_dimension(self) -> int:
        return 2 * self.n

    def torque(self, q, v, p_star, pd_star, pdd_star) -> np.ndarray:
        return K.id_task_control(
            *self.model._dyn, q, v, self._f.link, self._f.translation,
            p_star, pd_star, pdd_star, self.gains.kp, self.gains.kd,
            self.gains.pinv_damping, self.posture, self._kp_post,
            self._kd_post)

    def evaluate(self, x: JointState, t: float) -> np.ndarray:
        p_star, pd_star, pdd_star = self.traj.ref(t)
        return self.torque(x.q, x.v, p_star, pd_star, pdd_star)


def id_tracking_controller(model, x: JointState, t, gains, traj,
                           posture=None, frame="right_foot") -> np.ndarray:
    """One-shot evaluation of the task-space tracking torque."""
    posture = x.q if posture is None else posture
    return IDTrackingController(model, gains, traj, posture, frame).evaluate(x, t)


class MlpPolicy:
    """Feed-forward torque policy: tanh hidden layers, identity output.

    Input layout is (q, v, p*) of length 2n + 3, normalized as
    (z - offset) * scale before the first layer.
    """

    def __init__(self, weights, biases, offset=None, scale=None):
        self.weights = tuple(np.asarray(W, dtype=float) for W in weights)
        self.biases = tuple(np.asarray(b, dtype=float) for b in biases)
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias vector per weight matrix")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ValueError(f"layer {k}: bias/weight shape mismatch")
            if k > 0 and W.shape[1] != self.weights[k - 1].shape[0]:
                raise ValueError(f"layer {k}: input dim {W.shape[1]} does not "
                                 f"chain with previous output "
                                 f"{self.weights[k - 1].shape[0]}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {k}: non-finite parameters")
        self.input_dim = self.weights[0].shape[1]
        self.output_dim = self.weights[-1].shape[0]
        if (self.input_dim - 3) % 2:
            raise ValueError("input dim must be 2n + 3")
        self.n = (self.input_dim - 3) // 2
        if self.output_dim != self.n:
            raise ValueError("output dim must equal the joint count n")
        self.offset = (np.zeros(self.input_dim) if offset is None
                       else np.asarray(offset, dtype=float).reshape(self.input_dim))
        self.scale = (np.ones(self.input_dim) if scale is None
                      else np.asarray(scale, dtype=float).reshape(self.input_dim))

    @property
    def state_dimension(self) -> int:
        return 2 * self.n

    def _forward(self, z):
        """Activations per layer; hidden layers tanh, output identity."""
        acts = [(z - self.offset) * self.scale]
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            y = W @ acts[-1] + b
            acts.append(y if k == len(self.weights) - 1 else np.tanh(y))
        return acts

    def eval(self, x: JointState, p_star) -> np.ndarray:
        z = np.concatenate([x.q, x.v, np.asarray(p_star, dtype=float)])
        if z.shape[0] != self.input_dim:
            raise DimensionMismatch(
                f"policy expects input dim {self.input_dim}, got {z.shape[0]}")
        return self._forward(z)[-1]

    def state_jacobian(self, x: JointState, p_star) -> np.ndarray:
        """Analytic d tau / d (q, v): n x 2n, p* columns excluded."""
        z = np.concatenate([x.q, x.v, np.asarray(p_star, dtype=float)])
        if z.shape[0] != self.input_dim:
            raise DimensionMismatch(
                f"policy expects input dim {self.input_dim}, got {z.shape[0]}")
        acts = self._forward(z)
        J = self.weights[-1]
        for k in range(len(self.weights) - 2, -1, -1):
            J = (J * (1.0 - acts[k + 1] ** 2)) @ self.weights[k]
        J = J * self.scale  # input normalization chain factor
        return J[:, :2 * self.n]


def mlp_eval(policy: MlpPolicy, x: JointState, p_star) -> np.ndarray:
    return policy.eval(x, p_star)


def mlp_state_jacobian(policy: MlpPolicy, x: JointState, p_star) -> np.ndarray:
    return policy.state_jacobian(x, p_star)


class MlpPolicyController:
    """Adapts an MlpPolicy to the TorqueController interface by
    sampling the task reference at evaluation time."""

    def __init__(self, policy: MlpPolicy, traj: CircleTrajectory):
        self.policy = policy
        self.traj = traj
        self.n = policy.n

    @property
    def state_dimension(self) -> int:
        return 2 * self.n

    def evaluate(self, x: JointState, t: float) -> np.ndarray:
        return self.policy.eval(x, self.traj.position(t))


def random_policy(seed: int, n: int, hidden=(32, 32),
                  output_scale: float = 0.1) -> MlpPolicy:
    """Deterministic pretrained-like stand-in policy with bounded-ish
    output (small final layer)."""
    rng = np.random.default_rng(seed)
    dims = [2 * n + 3, *hidden, n]
    weights, biases = [], []
    for k in range(len(dims) - 1):
        W = rng.normal(0.0, 1.0 / math.sqrt(dims[k]), size=(dims[k + 1], dims[k]))
        b = rng.normal(0.0, 0.01, size=dims[k + 1])
        if k == len(dims) - 2:
            W *= output_scale
            b *= output_scale
        weights.append(W)
        biases.append(b)
    offset = np.zeros(dims[0])
    scale = np.ones(dims[0])
    scale[n:2 * n] = 0.1   # velocities enter in rad/s, tame their range
    return MlpPolicy(weights, biases, offset, scale)
