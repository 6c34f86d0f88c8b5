"""Affine interpolation laws tau = A x + b for torque controllers.

A law is built by differentiating a controller at an anchor state x_k
with time frozen at t_k, either by central finite differences or by the
analytic Jacobian of an MLP policy. The offset convention is
b = tau(x_k) - A x_k, so the fast loop evaluates A x + b on the raw
state with no anchor subtraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controllers import MlpPolicy
from .dynamics import DimensionMismatch, JointState

DEFAULT_FD_STEP = 1e-6


class LinearizationError(RuntimeError):
    """Controller produced a non-finite output while probing."""


@dataclass(frozen=True)
class LinearFeedbackLaw:
    """Immutable affine feedback law anchored at (x_k, t_k)."""

    A: np.ndarray          # n x 2n, N m per (rad | rad/s)
    b: np.ndarray          # n, N m
    x_k: np.ndarray        # 2n anchor state
    t_k: float
    seq: int = 0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        x_k = np.asarray(self.x_k, dtype=float).reshape(-1)
        n = b.shape[0]
        if A.shape != (n, 2 * n) or x_k.shape[0] != 2 * n:
            raise DimensionMismatch(
                f"law dims inconsistent: A {A.shape}, b {b.shape}, "
                f"x_k {x_k.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise LinearizationError("law contains non-finite entries")
        for a in (A, b, x_k):
            a.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x_k", x_k)

    @property
    def n(self) -> int:
        return self.b.shape[0]


def affine_rows(A, b, x) -> np.ndarray:
    """Row-wise A x + b. Both the centralized eval_law and the per-board
    driver evaluation use this exact operation so that their outputs are
    bitwise identical (a whole-matrix GEMV rounds differently from a
    row-sliced one)."""
    out = np.empty(b.shape[0])
    for i in range(b.shape[0]):
        out[i] = np.dot(A[i], x) + b[i]
    return out


def eval_law(law: LinearFeedbackLaw, x) -> np.ndarray:
    """Exact affine arithmetic A x + b; the fast-loop operation."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != 2 * law.n:
        raise DimensionMismatch(
            f"expected state length {2 * law.n}, got {x.shape[0]}")
    return affine_rows(law.A, law.b, x)


def _split_state(x, n):
    return JointState(x[:n], x[n:])


def linearize_fd(ctrl, x_k, t_k: float, h: float = DEFAULT_FD_STEP,
                 seq: int = 0) -> LinearFeedbackLaw:
    """Central-difference linearization of any controller at (x_k, t_k).

    ``ctrl`` is any object with evaluate(JointState, t) -> tau.
    """
    if isinstance(x_k, JointState):
        x_k = x_k.x
    x_k = np.asarray(x_k, dtype=float).reshape(-1)
    n = x_k.shape[0] // 2
    tau0 = np.asarray(ctrl.evaluate(_split_state(x_k, n), t_k), dtype=float)
    if not np.all(np.isfinite(tau0)):
        raise LinearizationError("controller non-finite at the anchor state")
    A = np.empty((n, 2 * n))
    xp = x_k.copy()
    for j in range(2 * n):
        xj = x_k[j]
        xp[j] = xj + h
        tp = ctrl.evaluate(_split_state(xp, n), t_k)
        xp[j] = xj - h
        tm = ctrl.evaluate(_split_state(xp, n), t_k)
        xp[j] = xj
        col = (np.asarray(tp, dtype=float) - np.asarray(tm, dtype=float)) / (2.0 * h)
        if not np.all(np.isfinite(col)):
            raise LinearizationError(
                f"controller non-finite while probing state coordinate {j}")
        A[:, j] = col
    return LinearFeedbackLaw(A=A, b=tau0 - A @ x_k, x_k=x_k, t_k=t_k, seq=seq)


def linearize_analytic(policy: MlpPolicy, x_k, p_star, t_k: float,
                       seq: int = 0) -> LinearFeedbackLaw:
    """Exact linearization of an MLP policy via its analytic state
    Jacobian; the tracking command p* is held constant."""
    if isinstance(x_k, JointState):
        state = x_k
        x_k = x_k.x
    else:
        x_k = np.asarray(x_k, dtype=float).reshape(-1)
        state = _split_state(x_k, x_k.shape[0] // 2)
    A = policy.state_jacobian(state, p_star)
    tau0 = policy.eval(state, p_star)
    return LinearFeedbackLaw(A=A, b=tau0 - A @ x_k, x_k=x_k, t_k=t_k, seq=seq)
