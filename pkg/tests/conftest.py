import numpy as np
import pytest

from linfb import (ExperimentConfig, Frame, JointSpec, JointState, RobotModel,
                   forward_kinematics, frame_jacobian, inverse_dynamics,
                   load_model, mass_matrix, run_experiment)


@pytest.fixture(scope="session")
def model():
    return load_model("bolt_lite")


@pytest.fixture(scope="session")
def fk_pendulum():
    """1-DoF pendulum, axis +y, 1 m link along local +x, tip frame at
    the far end."""
    joint = JointSpec(parent=-1, translation=(0, 0, 0), rotation=np.eye(3),
                      axis=(0.0, 1.0, 0.0), mass=1.0, com=(1.0, 0.0, 0.0),
                      inertia=np.zeros((3, 3)), damping=0.0, name="hinge")
    return RobotModel([joint], frames={"tip": Frame(link=0,
                                                    translation=(1, 0, 0))})


@pytest.fixture(scope="session")
def dyn_pendulum():
    """Point-mass pendulum (m = 1 kg, l = 1 m) whose angle is measured
    from the horizontal, positive upward: axis -y, so the gravity torque
    at q = 0 is +9.81 N m and the vertical equilibrium sits at q = pi/2."""
    joint = JointSpec(parent=-1, translation=(0, 0, 0), rotation=np.eye(3),
                      axis=(0.0, -1.0, 0.0), mass=1.0, com=(1.0, 0.0, 0.0),
                      inertia=np.zeros((3, 3)), damping=0.0, name="hinge")
    return RobotModel([joint], frames={"tip": Frame(link=0,
                                                    translation=(1, 0, 0))})


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup(model):
    """Compile every numba kernel once so timed tests measure the
    algorithms, not JIT latency."""
    q = np.zeros(model.n)
    forward_kinematics(model, q, "right_foot")
    frame_jacobian(model, q, "right_foot")
    inverse_dynamics(model, q, q, q)
    mass_matrix(model, q)
    for controller, mode in (("id", "interpolated"), ("id", "direct"),
                             ("mlp", "interpolated"), ("mlp", "direct")):
        cfg = ExperimentConfig(controller=controller, mode=mode,
                               duration=0.005, window_start=0.0)
        run_experiment(cfg, record_full=True)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def random_state(rng, n, q_scale=0.5, v_scale=1.0):
    return JointState(rng.normal(0.0, q_scale, n), rng.normal(0.0, v_scale, n))
