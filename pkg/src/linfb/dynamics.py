"""Fixed-base revolute-joint tree dynamics: kinematics, inverse/forward
dynamics, mass matrix and time integration.

All public operations are pure functions of immutable inputs. A
``RobotModel`` is safe to share across threads after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K


class UnknownFrameError(KeyError):
    """Named task frame does not exist on the model."""


class DimensionMismatch(ValueError):
    """Vector length does not match the model's joint count."""


class NonFiniteState(RuntimeError):
    """A state, input or integration result contains NaN/inf."""


class SingularMassMatrix(RuntimeError):
    """Mass matrix is not invertible; the model itself is invalid."""


class ModelError(ValueError):
    """Model description violates a structural invariant."""


def _vec3(x) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(3)
    a.flags.writeable = False
    return a


def _mat3(x) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(3, 3)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class JointSpec:
    """One revolute joint plus the link it drives."""

    parent: int                 # parent link index, -1 = fixed base
    translation: np.ndarray     # placement offset from parent link frame, m
    rotation: np.ndarray        # placement rotation, parent link -> joint frame
    axis: np.ndarray            # unit rotation axis, joint frame
    mass: float                 # link mass, kg
    com: np.ndarray             # link COM in link frame, m
    inertia: np.ndarray         # rotational inertia about COM, kg m^2
    damping: float = 0.0        # viscous damping, N m s/rad
    torque_limit: float = 2.7   # |tau| bound, N m (enforced by the executor)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "translation", _vec3(self.translation))
        object.__setattr__(self, "rotation", _mat3(self.rotation))
        object.__setattr__(self, "axis", _vec3(self.axis))
        object.__setattr__(self, "com", _vec3(self.com))
        object.__setattr__(self, "inertia", _mat3(self.inertia))
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-12:
            raise ModelError(f"joint {self.name!r}: axis must have unit norm")
        if not self.mass > 0:
            raise ModelError(f"joint {self.name!r}: link mass must be > 0")
        if np.max(np.abs(self.inertia - self.inertia.T)) > 1e-12:
            raise ModelError(f"joint {self.name!r}: inertia must be symmetric")
        if np.min(np.linalg.eigvalsh(self.inertia)) < -1e-12:
            raise ModelError(f"joint {self.name!r}: inertia must be PSD")
        if self.damping < 0:
            raise ModelError(f"joint {self.name!r}: damping must be >= 0")
        if not self.torque_limit > 0:
            raise ModelError(f"joint {self.name!r}: torque limit must be > 0")


@dataclass(frozen=True)
class Frame:
    """Named task frame: fixed offset from a link."""

    link: int
    translation: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "translation", _vec3(self.translation))
        object.__setattr__(self, "rotation", _mat3(self.rotation))


class RobotModel:
    """Immutable kinematic/inertial description of a revolute-joint tree.

    Packs the joint specs into flat arrays consumed by the numba
    kernels; the packed arrays are read-only.
    """

    def __init__(self, joints, gravity=(0.0, 0.0, -9.81), frames=None,
                 name="robot"):
        self.name = name
        self.joints = tuple(joints)
        self.gravity = _vec3(gravity)
        self.frames = dict(frames or {})
        n = len(self.joints)
        if n == 0:
            raise ModelError("model needs at least one joint")
        for i, j in enumerate(self.joints):
            if not -1 <= j.parent < i:
                raise ModelError(
                    f"joint {i}: parent index {j.parent} breaks tree order")
        for fname, f in self.frames.items():
            if not 0 <= f.link < n:
                raise ModelError(f"frame {fname!r} references invalid link "
                                 f"{f.link}")
        self.n = n
        self.parent = np.array([j.parent for j in self.joints], dtype=np.int32)
        self.Rpl = np.stack([j.rotation for j in self.joints])
        self.ppl = np.stack([j.translation for j in self.joints])
        self.axis = np.stack([j.axis for j in self.joints])
        self.mass = np.array([j.mass for j in self.joints])
        self.com = np.stack([j.com for j in self.joints])
        self.inertia = np.stack([j.inertia for j in self.joints])
        self.damping = np.array([j.damping for j in self.joints])
        self.torque_limits = np.array([j.torque_limit for j in self.joints])
        for a in (self.parent, self.Rpl, self.ppl, self.axis, self.mass,
                  self.com, self.inertia, self.damping, self.torque_limits):
            a.flags.writeable = False
        # positional kernel arguments, kinematics-only and full
        self._kin = (self.parent, self.Rpl, self.ppl, self.axis)
        self._dyn = self._kin + (self.mass, self.com, self.inertia,
                                 self.damping, self.gravity)

    def frame(self, name: str) -> Frame:
        try:
            return self.frames[name]
        except KeyError:
            raise UnknownFrameError(name) from None

    def check_q(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.shape[0] != self.n:
            raise DimensionMismatch(
                f"expected length {self.n}, got {q.shape[0]}")
        return q


@dataclass(frozen=True)
class JointState:
    """Joint angles q (rad) and velocities v (rad/s)."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if q.shape != v.shape:
            raise DimensionMismatch("q and v must have the same length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise NonFiniteState("joint state contains non-finite entries")
        q.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    @property
    def x(self) -> np.ndarray:
        """Stacked state (q, v), length 2n."""
        return np.concatenate([self.q, self.v])


def forward_kinematics(model: RobotModel, q, frame: str):
    """World pose (position, rotation) of a named frame."""
    f = model.frame(frame)
    q = model.check_q(q)
    return K.frame_pose(*model._kin, q, f.link, f.translation, f.rotation)


def frame_jacobian(model: RobotModel, q, frame: str) -> np.ndarray:
    """World-frame linear-velocity Jacobian, 3 x n: pdot = J v."""
    f = model.frame(frame)
    q = model.check_q(q)
    return K.frame_jacobian(*model._kin, q, f.link, f.translation)


def frame_velocity(model: RobotModel, q, v, frame: str):
    """World position and linear velocity of a named frame."""
    f = model.frame(frame)
    q = model.check_q(q)
    v = model.check_q(v)
    return K.frame_velocity(*model._kin, q, v, f.link, f.translation)


def jdot_v(model: RobotModel, q, v, frame: str) -> np.ndarray:
    """Jacobian drift term dJ/dt * v (frame acceleration at zero qdd)."""
    f = model.frame(frame)
    q = model.check_q(q)
    v = model.check_q(v)
    return K.jdot_v(*model._kin, q, v, f.link, f.translation)


def inverse_dynamics(model: RobotModel, q, v, a,
                     with_damping: bool = True) -> np.ndarray:
    """tau = M(q) a + C(q, v) v + g(q) [+ D v], recursive Newton-Euler."""
    q = model.check_q(q)
    v = model.check_q(v)
    a = model.check_q(a)
    for name, x in (("q", q), ("v", v), ("a", a)):
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"non-finite {name}")
    return K.rnea(*model._dyn, q, v, a, with_damping)


def mass_matrix(model: RobotModel, q) -> np.ndarray:
    """Joint-space mass matrix via the composite-rigid-body algorithm."""
    q = model.check_q(q)
    return K.crba(model.parent, model.Rpl, model.ppl, model.axis,
                  model.mass, model.com, model.inertia, q)


def forward_dynamics(model: RobotModel, q, v, tau) -> np.ndarray:
    """Joint accelerations solving M(q) a = tau - bias(q, v)."""
    q = model.check_q(q)
    v = model.check_q(v)
    tau = model.check_q(tau)
    M = mass_matrix(model, q)
    bias = inverse_dynamics(model, q, v, np.zeros(model.n))
    try:
        return np.linalg.solve(M, tau - bias)
    except np.linalg.LinAlgError as e:
        raise SingularMassMatrix(str(e)) from None


def integrate_step(model: RobotModel, state: JointState, tau,
                   dt: float) -> JointState:
    """One semi-implicit Euler step: v += a dt, then q += v dt."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    tau = model.check_q(tau)
    q2, v2 = K.semi_implicit_step(*model._dyn, state.q, state.v, tau, dt)
    if not (np.all(np.isfinite(q2)) and np.all(np.isfinite(v2))):
        raise NonFiniteState("integration produced non-finite state")
    return JointState(q2, v2)
