"""High-frequency linear interpolation of non-linear torque controllers.

Simulation stack: rigid-body dynamics, task-space ID and MLP torque
controllers, affine-law linearization, a tick-accurate emulation of the
daisy-chained motor-driver ring, a deterministic multirate executor and
an experiment harness.
"""

from .controllers import (CircleTrajectory, IDTrackingController, MlpPolicy,
                          MlpPolicyController, TaskGains, circle_ref,
                          mlp_eval, mlp_state_jacobian, random_policy)
from .dynamics import (Frame, JointSpec, JointState, RobotModel,
                       forward_dynamics, forward_kinematics, frame_jacobian,
                       frame_velocity, integrate_step, inverse_dynamics,
                       jdot_v, mass_matrix)
from .drivernet import BoardConfig, DriverNetwork, default_boards
from .linearize import (LinearFeedbackLaw, eval_law, linearize_analytic,
                        linearize_fd)
from .model_io import load_model, model_from_dict
from .policy_io import load_policy, save_policy
from .simloop import (ExperimentConfig, SimTrace, centralized_replay,
                      decimation_equivalence_check, load_trace,
                      run_experiment)
from .sweep import (ModeComparison, SummaryRow, SweepSpec, compare_modes,
                    percentile, run_sweep)
from .wire import (StatePacket, crc16, decode_law_update, decode_packet,
                   encode_law_update, encode_packet)

__version__ = "0.1.0"
