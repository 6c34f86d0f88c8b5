"""Deterministic multirate executor.

Binds the plant (fixed-step semi-implicit Euler at the fast rate), the
slow non-linear controller loop, the linearization/law-update channel
and the driver-network fast feedback. One fast tick = one plant step.

Per-tick order: sense -> slow-loop evaluation (on its boundaries) ->
law staging (on push boundaries) -> fast torque -> clamp -> actuation
delay -> record -> integrate. Runs are bit-reproducible for a fixed
seed; simulation divergence is recorded as an outcome, never raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels as K
from .controllers import (CircleTrajectory, IDTrackingController,
                          MlpPolicyController, TaskGains, random_policy)
from .dynamics import JointState, NonFiniteState, RobotModel
from .drivernet import DriverNetwork, default_boards
from .linearize import LinearFeedbackLaw, eval_law, linearize_analytic, linearize_fd
from .model_io import load_model
from .policy_io import load_policy

DEFAULT_POSTURE = (0.0, 0.7, -1.4, 0.0, 0.7, -1.4)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    # plant / controller selection
    model: str = "bolt_lite"
    controller: str = "id"              # "id" | "mlp"
    mode: str = "interpolated"          # "direct" | "interpolated"
    # rates
    fast_hz: int = 40000
    controller_hz: Optional[int] = None  # default: 500 for id, 200 for mlp
    law_push_hz: int = 1000
    decimation: int = 1
    hop_delay: int = 0
    law_latency_ticks: int = 0
    duration: float = 2.0               # s
    seed: int = 0
    # task / gains
    kp: float = 500.0                   # s^-2
    kd: Optional[float] = None          # s^-1; None -> sqrt(2 kp)
    pinv_damping: float = 1e-4
    posture_gain: float = 10.0          # s^-2
    posture: Optional[tuple] = None     # rad; None -> DEFAULT_POSTURE
    q0: Optional[tuple] = None          # rad; None -> posture
    v0: Optional[tuple] = None          # rad/s; None -> zeros
    frame: str = "right_foot"
    circle_radius: float = 0.05         # m
    circle_omega: float = math.pi       # rad/s
    circle_phase: float = 0.0
    circle_center: Optional[tuple] = None  # m; None -> FK(posture)
    circle_u: tuple = (1.0, 0.0, 0.0)
    circle_w: tuple = (0.0, 0.0, 1.0)
    # mlp policy
    policy_file: Optional[str] = None
    policy_seed: int = 7
    policy_hidden: tuple = (32, 32)
    policy_output_scale: float = 0.1
    # sensing / actuation realism
    vel_noise_std: float = 0.05         # rad/s per fast-tick sample
    vel_lp_cutoff_hz: float = 500.0     # 0 disables the low-pass
    actuation_delay_ticks: int = 1
    torque_limit: Optional[float] = None  # N m; None -> model limits
    # linearization
    fd_step: float = 1e-6
    # bookkeeping
    store_decimation: int = 8
    window_start: float = 1.0           # s, steady-state window for metrics
    blowup_velocity: float = 1e3        # rad/s

    def resolved_controller_hz(self) -> int:
        if self.controller_hz is not None:
            return self.controller_hz
        return 200 if self.controller == "mlp" else 500

    def validate(self) -> None:
        if self.controller not in ("id", "mlp"):
            raise ConfigError(f"unknown controller {self.controller!r}")
        if self.mode not in ("direct", "interpolated"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        chz = self.resolved_controller_hz()
        if self.fast_hz % chz:
            raise ConfigError("fast_hz must be divisible by controller_hz")
        if self.fast_hz % self.law_push_hz:
            raise ConfigError("fast_hz must be divisible by law_push_hz")
        if self.law_push_hz > 1000:
            raise ConfigError("law_push_hz is limited to 1000 Hz")
        if not self.duration > 0:
            raise ConfigError("duration must be > 0")
        if self.decimation < 1:
            raise ConfigError("decimation must be >= 1")
        if self.store_decimation < 1:
            raise ConfigError("store_decimation must be >= 1")
        if self.actuation_delay_ticks < 0 or self.law_latency_ticks < 0:
            raise ConfigError("tick delays must be >= 0")
        if self.vel_noise_std < 0:
            raise ConfigError("vel_noise_std must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        doc = {k: (tuple(v) if isinstance(v, list) else v)
               for k, v in doc.items()}
        return cls(**doc)

    @classmethod
    def from_yaml(cls, path: str) -> "ExperimentConfig":
        import yaml
        with open(path) as f:
            doc = yaml.safe_load(f) or {}
        if not isinstance(doc, dict):
            raise ConfigError("config file must contain a YAML mapping")
        return cls.from_dict(doc)


TRACE_FIELDS = ("t", "q", "v", "tau", "p", "pd", "p_star", "pd_star",
                "pos_err", "vel_err")


@dataclass
class SimTrace:
    """Time-indexed record of one run (rows decimated for storage)."""

    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    tau: np.ndarray          # applied torque, post-clamp, post-delay
    p: np.ndarray
    pd: np.ndarray
    p_star: np.ndarray
    pd_star: np.ndarray
    pos_err: np.ndarray      # ||p* - p||, m
    vel_err: np.ndarray      # ||pd* - pd||, m/s
    blew_up: bool = False
    blowup_time: Optional[float] = None
    # full-rate instrumentation (only when record_full=True)
    sensed: Optional[np.ndarray] = None      # (ticks, 2n)
    tau_cmd: Optional[np.ndarray] = None     # (ticks, n) pre-clamp command
    law_events: list = field(default_factory=list)  # (stage_tick, law)

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def columns(self):
        n = self.n
        cols = ["t"]
        cols += [f"q{i}" for i in range(n)]
        cols += [f"v{i}" for i in range(n)]
        cols += [f"tau{i}" for i in range(n)]
        for name in ("p", "pd", "pstar", "pdstar"):
            cols += [f"{name}_{ax}" for ax in "xyz"]
        cols += ["pos_err", "vel_err"]
        return cols

    def to_csv(self, path: str) -> None:
        data = np.column_stack([
            self.t, self.q, self.v, self.tau, self.p, self.pd,
            self.p_star, self.pd_star, self.pos_err, self.vel_err])
        with open(path, "w", newline="\n") as f:
            f.write("# blew_up=%d blowup_time=%s\n"
                    % (int(self.blew_up),
                       "nan" if self.blowup_time is None
                       else repr(self.blowup_time)))
            f.write(",".join(self.columns()) + "\n")
            for row in data:
                f.write(",".join("%.17g" % x for x in row) + "\n")


def load_trace(path: str) -> SimTrace:
    with open(path) as f:
        meta = f.readline().strip()
        header = f.readline().strip().split(",")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    if data.size == 0:
        data = data.reshape(0, len(header))
    n = sum(1 for c in header if c.startswith("q"))
    parts = {}
    i = 0
    for name, width in (("t", 1), ("q", n), ("v", n), ("tau", n), ("p", 3),
                        ("pd", 3), ("p_star", 3), ("pd_star", 3),
                        ("pos_err", 1), ("vel_err", 1)):
        block = data[:, i:i + width]
        parts[name] = block[:, 0] if width == 1 else block
        i += width
    kv = dict(tok.split("=") for tok in meta.lstrip("# ").split())
    blew_up = bool(int(kv["blew_up"]))
    bt = kv["blowup_time"]
    return SimTrace(blew_up=blew_up,
                    blowup_time=None if bt == "nan" else float(bt), **parts)


def _build_setup(cfg: ExperimentConfig):
    cfg.validate()
    model = load_model(cfg.model)
    n = model.n
    posture = np.asarray(cfg.posture if cfg.posture is not None
                         else DEFAULT_POSTURE[:n], dtype=float)
    posture = model.check_q(posture)
    if cfg.circle_center is not None:
        center = np.asarray(cfg.circle_center, dtype=float)
    else:
        center, _ = K.frame_pose(*model._kin, posture,
                                 model.frame(cfg.frame).link,
                                 model.frame(cfg.frame).translation,
                                 model.frame(cfg.frame).rotation)
    traj = CircleTrajectory(center=center, radius=cfg.circle_radius,
                            omega=cfg.circle_omega, phase=cfg.circle_phase,
                            u=np.asarray(cfg.circle_u, dtype=float),
                            w=np.asarray(cfg.circle_w, dtype=float))
    if cfg.controller == "id":
        kp = cfg.kp
        gains = (TaskGains.critically_damped(kp, pinv_damping=cfg.pinv_damping,
                                             posture_gain=cfg.posture_gain)
                 if cfg.kd is None else
                 TaskGains(kp=kp, kd=cfg.kd, pinv_damping=cfg.pinv_damping,
                           posture_gain=cfg.posture_gain))
        ctrl = IDTrackingController(model, gains, traj, posture,
                                    frame=cfg.frame)
        policy = None
    else:
        policy = (load_policy(cfg.policy_file) if cfg.policy_file
                  else random_policy(cfg.policy_seed, n,
                                     hidden=tuple(cfg.policy_hidden),
                                     output_scale=cfg.policy_output_scale))
        if policy.n != n:
            raise ConfigError(f"policy is for n={policy.n}, model has n={n}")
        ctrl = MlpPolicyController(policy, traj)
    return model, posture, traj, ctrl, policy


def run_experiment(cfg: ExperimentConfig,
                   record_full: bool = False) -> SimTrace:
    model, posture, traj, ctrl, policy = _build_setup(cfg)
    n = model.n
    fast_hz = cfg.fast_hz
    dt = 1.0 / fast_hz
    n_ticks = int(round(cfg.duration * fast_hz))
    ctrl_period = fast_hz // cfg.resolved_controller_hz()
    push_period = fast_hz // cfg.law_push_hz
    interpolated = cfg.mode == "interpolated"
    frame = model.frame(cfg.frame)
    limit = (model.torque_limits if cfg.torque_limit is None
             else np.full(n, float(cfg.torque_limit)))

    q = model.check_q(cfg.q0 if cfg.q0 is not None else posture).copy()
    v = (model.check_q(cfg.v0) if cfg.v0 is not None else np.zeros(n)).copy()

    rng = np.random.default_rng(cfg.seed)
    noise = (rng.normal(0.0, cfg.vel_noise_std, size=(n_ticks, n))
             if cfg.vel_noise_std > 0 else None)
    fc = cfg.vel_lp_cutoff_hz
    alpha = dt / (dt + 1.0 / (2.0 * math.pi * fc)) if fc and fc > 0 else 1.0
    v_filt = v.copy()

    net = None
    if interpolated:
        net = DriverNetwork(default_boards(n), n, hop_delay=cfg.hop_delay,
                            decimation=cfg.decimation)
    delay = cfg.actuation_delay_ticks
    delay_buf = np.zeros((delay + 1, n))

    n_rows = (n_ticks + cfg.store_decimation - 1) // cfg.store_decimation
    rows = {
        "t": np.zeros(n_rows), "q": np.zeros((n_rows, n)),
        "v": np.zeros((n_rows, n)), "tau": np.zeros((n_rows, n)),
        "p": np.zeros((n_rows, 3)), "pd": np.zeros((n_rows, 3)),
        "p_star": np.zeros((n_rows, 3)), "pd_star": np.zeros((n_rows, 3)),
        "pos_err": np.zeros(n_rows), "vel_err": np.zeros(n_rows),
    }
    sensed_hist = np.zeros((n_ticks, 2 * n)) if record_full else None
    tau_cmd_hist = np.zeros((n_ticks, n)) if record_full else None
    law_events = []

    tau_slow = np.zeros(n)
    latest_law = None
    staged_law = None
    seq = 0
    blew_up = False
    blowup_time = None
    row = 0
    kin = model._kin

    for k in range(n_ticks):
        t = k * dt
        # 1. sense (velocity noise -> low-pass -> float32 wire precision)
        vm = v if noise is None else v + noise[k]
        if alpha < 1.0:
            v_filt += alpha * (vm - v_filt)
        else:
            v_filt = vm.astype(float)
        q_s = q.astype(np.float32).astype(float)
        v_s = v_filt.astype(np.float32).astype(float)
        x_s = np.concatenate([q_s, v_s])

        # 2. slow loop
        if k % ctrl_period == 0:
            xs_state = JointState(q_s, v_s)
            if policy is not None:
                p_hold = traj.position(t)   # held between evaluations
                tau_slow = policy.eval(xs_state, p_hold)
                if interpolated:
                    seq += 1
                    latest_law = (k, linearize_analytic(
                        policy, xs_state, p_hold, t, seq=seq))
            else:
                tau_slow = ctrl.evaluate(xs_state, t)
                if interpolated:
                    seq += 1
                    latest_law = (k, linearize_fd(ctrl, xs_state, t,
                                                  h=cfg.fd_step, seq=seq))

        # 3. law push channel
        if (interpolated and latest_law is not None
                and k % push_period == 0
                and latest_law[1] is not staged_law
                and k >= latest_law[0] + cfg.law_latency_ticks):
            staged_law = latest_law[1]
            net.stage_law(staged_law)
            law_events.append((k, staged_law))

        # 4. fast torque
        if interpolated:
            tau_cmd = net.tick_full(x_s)
        else:
            tau_cmd = tau_slow
        if record_full:
            sensed_hist[k] = x_s
            tau_cmd_hist[k] = tau_cmd

        # 5. clamp + actuation delay
        delay_buf[k % (delay + 1)] = np.clip(tau_cmd, -limit, limit)
        tau_applied = delay_buf[(k - delay) % (delay + 1)] if k >= delay \
            else np.zeros(n)

        # 6. record
        if k % cfg.store_decimation == 0:
            p, pd = K.frame_velocity(*kin, q, v, frame.link, frame.translation)
            ps, pds, _ = traj.ref(t)
            rows["t"][row] = t
            rows["q"][row] = q
            rows["v"][row] = v
            rows["tau"][row] = tau_applied
            rows["p"][row] = p
            rows["pd"][row] = pd
            rows["p_star"][row] = ps
            rows["pd_star"][row] = pds
            rows["pos_err"][row] = np.linalg.norm(ps - p)
            rows["vel_err"][row] = np.linalg.norm(pds - pd)
            row += 1

        # 7. integrate one fast step
        q2, v2 = K.semi_implicit_step(*model._dyn, q, v, tau_applied, dt)
        if (not (np.all(np.isfinite(q2)) and np.all(np.isfinite(v2)))
                or np.max(np.abs(v2)) > cfg.blowup_velocity):
            blew_up = True
            blowup_time = t
            if record_full:
                sensed_hist = sensed_hist[:k + 1]
                tau_cmd_hist = tau_cmd_hist[:k + 1]
            break
        q, v = q2, v2

    for key in rows:
        rows[key] = rows[key][:row]
    return SimTrace(blew_up=blew_up, blowup_time=blowup_time,
                    sensed=sensed_hist, tau_cmd=tau_cmd_hist,
                    law_events=law_events, **rows)


def centralized_replay(trace: SimTrace, n: int, decimation: int) -> np.ndarray:
    """Single-process reference for the driver network: replay the
    recorded sensed states and law schedule through plain eval_law with
    the same decimation. Requires a record_full trace."""
    if trace.sensed is None:
        raise ValueError("needs a record_full trace")
    events = sorted(trace.law_events, key=lambda e: e[0])
    ei = 0
    law = None
    held = np.zeros(n)
    out = np.zeros((trace.sensed.shape[0], n))
    for k in range(trace.sensed.shape[0]):
        while ei < len(events) and events[ei][0] <= k:
            law = events[ei][1]
            ei += 1
        if k % decimation == 0 and law is not None:
            held = eval_law(law, trace.sensed[k])
        out[k] = held
    return out


def decimation_equivalence_check(cfg: ExperimentConfig, D: int) -> bool:
    """Exact-equality check: interpolated feedback at fast_hz with
    decimation D against feedback at fast_hz/D with decimation 1, fed
    the identical sensed-state trajectory at the shared ticks."""
    if cfg.hop_delay != 0:
        raise ConfigError("decimation equivalence requires hop_delay = 0")
    run_cfg = replace(cfg, mode="interpolated", decimation=D)
    trace = run_experiment(run_cfg, record_full=True)
    model = load_model(cfg.model)
    n = model.n
    net = DriverNetwork(default_boards(n), n, hop_delay=0, decimation=1)
    events = sorted(trace.law_events, key=lambda e: e[0])
    ei = 0
    for k in range(0, trace.sensed.shape[0], D):
        while ei < len(events) and events[ei][0] <= k:
            net.stage_law(events[ei][1])
            ei += 1
        tau = net.tick_full(trace.sensed[k])
        if not np.array_equal(tau, trace.tau_cmd[k]):
            return False
    return True
