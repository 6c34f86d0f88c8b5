"""Numba kernels for fixed-base revolute-joint tree dynamics.

All kernels operate on the packed model arrays produced by
``RobotModel`` (see dynamics.py):

    parent  (nj,)   int32, parent link index, -1 for the fixed base
    Rpl     (nj,3,3) fixed rotation parent link frame -> joint frame
    ppl     (nj,3)  fixed translation parent link frame -> joint frame, m
    axis    (nj,3)  unit joint axis in the joint frame
    mass    (nj,)   kg
    com     (nj,3)  COM offset in the link frame, m
    inertia (nj,3,3) rotational inertia about the COM, link frame, kg m^2
    damping (nj,)   viscous joint damping, N m s/rad

Conventions: world frame quantities throughout; link i's frame is the
joint frame rotated by q_i about the joint axis; joints are listed in
topological order (parent index < own index).
"""

from __future__ import annotations

import numpy as np
from numba import njit

_EYE3 = np.eye(3)


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _rot_axis(axis, angle):
    """Rodrigues rotation about a unit axis."""
    c = np.cos(angle)
    s = np.sin(angle)
    x, y, z = axis[0], axis[1], axis[2]
    C = 1.0 - c
    R = np.empty((3, 3))
    R[0, 0] = c + x * x * C
    R[0, 1] = x * y * C - z * s
    R[0, 2] = x * z * C + y * s
    R[1, 0] = y * x * C + z * s
    R[1, 1] = c + y * y * C
    R[1, 2] = y * z * C - x * s
    R[2, 0] = z * x * C - y * s
    R[2, 1] = z * y * C + x * s
    R[2, 2] = c + z * z * C
    return R


@njit(cache=True)
def fk_chain(parent, Rpl, ppl, axis, q):
    """World rotation R, joint-origin position p and world axis s per link."""
    nj = parent.shape[0]
    R = np.empty((nj, 3, 3))
    p = np.empty((nj, 3))
    s = np.empty((nj, 3))
    for i in range(nj):
        pi = parent[i]
        if pi < 0:
            Rj = Rpl[i].copy()
            p[i] = ppl[i]
        else:
            Rj = R[pi] @ Rpl[i]
            p[i] = p[pi] + R[pi] @ ppl[i]
        s[i] = Rj @ axis[i]
        R[i] = Rj @ _rot_axis(axis[i], q[i])
    return R, p, s


@njit(cache=True)
def frame_pose(parent, Rpl, ppl, axis, q, link, off_p, off_R):
    R, p, _ = fk_chain(parent, Rpl, ppl, axis, q)
    pos = p[link] + R[link] @ off_p
    rot = R[link] @ off_R
    return pos, rot


@njit(cache=True)
def frame_jacobian(parent, Rpl, ppl, axis, q, link, off_p):
    """Linear-velocity rows of the world-frame frame Jacobian, 3 x nj."""
    nj = parent.shape[0]
    R, p, s = fk_chain(parent, Rpl, ppl, axis, q)
    pf = p[link] + R[link] @ off_p
    J = np.zeros((3, nj))
    j = link
    while j >= 0:
        J[:, j] = _cross(s[j], pf - p[j])
        j = parent[j]
    return J


@njit(cache=True)
def _vel_recursion(parent, Rpl, ppl, axis, q, v):
    """Angular velocity w, angular accel (qdd = 0) al, joint-origin
    velocity vo and acceleration (qdd = 0) ao per link."""
    nj = parent.shape[0]
    R, p, s = fk_chain(parent, Rpl, ppl, axis, q)
    w = np.zeros((nj, 3))
    al = np.zeros((nj, 3))
    vo = np.zeros((nj, 3))
    ao = np.zeros((nj, 3))
    for i in range(nj):
        pi = parent[i]
        if pi < 0:
            wp = np.zeros(3)
            alp = np.zeros(3)
            vop = np.zeros(3)
            aop = np.zeros(3)
            d = p[i]
        else:
            wp = w[pi]
            alp = al[pi]
            vop = vo[pi]
            aop = ao[pi]
            d = p[i] - p[pi]
        w[i] = wp + s[i] * v[i]
        al[i] = alp + _cross(wp, s[i]) * v[i]
        vo[i] = vop + _cross(wp, d)
        ao[i] = aop + _cross(alp, d) + _cross(wp, _cross(wp, d))
    return R, p, s, w, al, vo, ao


@njit(cache=True)
def frame_velocity(parent, Rpl, ppl, axis, q, v, link, off_p):
    R, p, s, w, al, vo, ao = _vel_recursion(parent, Rpl, ppl, axis, q, v)
    r = R[link] @ off_p
    pos = p[link] + r
    vel = vo[link] + _cross(w[link], r)
    return pos, vel


@njit(cache=True)
def jdot_v(parent, Rpl, ppl, axis, q, v, link, off_p):
    """dJ/dt * v: the frame's linear acceleration along qdot = v, qdd = 0."""
    R, p, s, w, al, vo, ao = _vel_recursion(parent, Rpl, ppl, axis, q, v)
    r = R[link] @ off_p
    return ao[link] + _cross(al[link], r) + _cross(w[link], _cross(w[link], r))


@njit(cache=True)
def rnea(parent, Rpl, ppl, axis, mass, com, inertia, damping, gravity,
         q, v, a, with_damping):
    """Recursive Newton-Euler inverse dynamics over the tree.

    Returns tau with gravity included (base carries -gravity as a
    fictitious acceleration) and viscous damping if requested.
    """
    nj = parent.shape[0]
    R, p, s = fk_chain(parent, Rpl, ppl, axis, q)
    w = np.zeros((nj, 3))
    wd = np.zeros((nj, 3))
    ao = np.zeros((nj, 3))
    f = np.zeros((nj, 3))
    n = np.zeros((nj, 3))
    c = np.zeros((nj, 3))
    for i in range(nj):
        pi = parent[i]
        if pi < 0:
            wp = np.zeros(3)
            wdp = np.zeros(3)
            aop = -gravity
            d = p[i]
        else:
            wp = w[pi]
            wdp = wd[pi]
            aop = ao[pi]
            d = p[i] - p[pi]
        w[i] = wp + s[i] * v[i]
        wd[i] = wdp + s[i] * a[i] + _cross(wp, s[i]) * v[i]
        ao[i] = aop + _cross(wdp, d) + _cross(wp, _cross(wp, d))
        r = R[i] @ com[i]
        c[i] = p[i] + r
        ac = ao[i] + _cross(wd[i], r) + _cross(w[i], _cross(w[i], r))
        Iw = R[i] @ inertia[i] @ R[i].T
        f[i] = mass[i] * ac
        n[i] = Iw @ wd[i] + _cross(w[i], Iw @ w[i]) + _cross(r, f[i])
    tau = np.empty(nj)
    for i in range(nj - 1, -1, -1):
        tau[i] = s[i] @ n[i]
        if with_damping:
            tau[i] += damping[i] * v[i]
        pi = parent[i]
        if pi >= 0:
            n[pi] += n[i] + _cross(p[i] - p[pi], f[i])
            f[pi] += f[i]
    return tau


@njit(cache=True)
def crba(parent, Rpl, ppl, axis, mass, com, inertia, q):
    """Composite-rigid-body mass matrix, world frame."""
    nj = parent.shape[0]
    R, p, s = fk_chain(parent, Rpl, ppl, axis, q)
    mc = mass.copy()
    cc = np.empty((nj, 3))
    Ic = np.empty((nj, 3, 3))
    for i in range(nj):
        cc[i] = p[i] + R[i] @ com[i]
        Ic[i] = R[i] @ inertia[i] @ R[i].T
    # accumulate subtree composites into parents (children have larger index)
    for i in range(nj - 1, -1, -1):
        pi = parent[i]
        if pi < 0:
            continue
        m = mc[pi] + mc[i]
        c = (mc[pi] * cc[pi] + mc[i] * cc[i]) / m
        d1 = cc[pi] - c
        d2 = cc[i] - c
        I = (Ic[pi] + mc[pi] * ((d1 @ d1) * _EYE3 - np.outer(d1, d1))
             + Ic[i] + mc[i] * ((d2 @ d2) * _EYE3 - np.outer(d2, d2)))
        mc[pi] = m
        cc[pi] = c
        Ic[pi] = I
    M = np.zeros((nj, nj))
    for i in range(nj):
        r = cc[i] - p[i]
        fi = mc[i] * _cross(s[i], r)
        ni = Ic[i] @ s[i] + _cross(r, fi)
        M[i, i] = s[i] @ ni
        j = parent[i]
        while j >= 0:
            nj_ = ni + _cross(p[i] - p[j], fi)
            M[j, i] = s[j] @ nj_
            M[i, j] = M[j, i]
            j = parent[j]
    return M


@njit(cache=True)
def forward_dynamics(parent, Rpl, ppl, axis, mass, com, inertia, damping,
                     gravity, q, v, tau):
    bias = rnea(parent, Rpl, ppl, axis, mass, com, inertia, damping, gravity,
                q, v, np.zeros_like(q), True)
    M = crba(parent, Rpl, ppl, axis, mass, com, inertia, q)
    return np.linalg.solve(M, tau - bias)


@njit(cache=True)
def semi_implicit_step(parent, Rpl, ppl, axis, mass, com, inertia, damping,
                       gravity, q, v, tau, dt):
    a = forward_dynamics(parent, Rpl, ppl, axis, mass, com, inertia, damping,
                         gravity, q, v, tau)
    v2 = v + a * dt
    q2 = q + v2 * dt
    return q2, v2


@njit(cache=True)
def id_task_control(parent, Rpl, ppl, axis, mass, com, inertia, damping,
                    gravity, q, v, link, off_p,
                    p_star, pd_star, pdd_star, kp, kd, lam,
                    q_post, kp_post, kd_post):
    """Task-space inverse-dynamics tracking torque.

    Damped least-squares resolution of J a = pdd_cmd - Jdot v with a
    nullspace PD pull toward q_post; torque via RNEA.
    """
    nj = parent.shape[0]
    R, p, s, w, al, vo, ao = _vel_recursion(parent, Rpl, ppl, axis, q, v)
    r = R[link] @ off_p
    pf = p[link] + r
    vf = vo[link] + _cross(w[link], r)
    jdv = ao[link] + _cross(al[link], r) + _cross(w[link], _cross(w[link], r))
    J = np.zeros((3, nj))
    j = link
    while j >= 0:
        J[:, j] = _cross(s[j], pf - p[j])
        j = parent[j]
    pdd_cmd = pdd_star + kp * (p_star - pf) + kd * (pd_star - vf)
    rhs = pdd_cmd - jdv
    JJt = J @ J.T + lam * _EYE3
    a_task = J.T @ np.linalg.solve(JJt, rhs)
    a_null = kp_post * (q_post - q) - kd_post * v
    a = a_task + a_null - J.T @ np.linalg.solve(JJt, J @ a_null)
    return rnea(parent, Rpl, ppl, axis, mass, com, inertia, damping, gravity,
                q, v, a, True)
