"""Hot numeric kernels: kinematics, dynamics terms, contact, and the plant
integrator stage.

Everything here works on packed float64 arrays (see ``KinematicChain.packed``)
so the whole closed-loop inner step runs inside compiled code when numba is
enabled (``phri._accel``).  The pure-numpy fallback executes the same
statements.

Frames: base-frame quantities throughout; the surface wrench is returned in
the base frame and acts ON the robot (reaction), applied at the contact point
and reduced about the wrist center.
"""
from __future__ import annotations

import numpy as np

from ._accel import maybe_njit

# surface kinds
PLANE = 0
SPHERE = 1


@maybe_njit
def _cross3(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


# Explicit 3x3 helpers: numba routes small `@` through BLAS, which dominates
# the step cost; unrolled loops compile to straight-line scalar code instead.
@maybe_njit
def _mv3(A, v):
    out = np.empty(3)
    out[0] = A[0, 0] * v[0] + A[0, 1] * v[1] + A[0, 2] * v[2]
    out[1] = A[1, 0] * v[0] + A[1, 1] * v[1] + A[1, 2] * v[2]
    out[2] = A[2, 0] * v[0] + A[2, 1] * v[1] + A[2, 2] * v[2]
    return out


@maybe_njit
def _mm33(A, B):
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = A[i, 0] * B[0, j] + A[i, 1] * B[1, j] + A[i, 2] * B[2, j]
    return out


@maybe_njit
def _sandwich33(R, I):
    """R @ I @ R.T for a symmetric I."""
    return _mm33(_mm33(R, I), R.T.copy())


@maybe_njit
def _dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@maybe_njit
def _rot_axis_angle(axis, angle):
    c = np.cos(angle)
    s = np.sin(angle)
    v = 1.0 - c
    x, y, z = axis[0], axis[1], axis[2]
    R = np.empty((3, 3))
    R[0, 0] = c + x * x * v
    R[0, 1] = x * y * v - z * s
    R[0, 2] = x * z * v + y * s
    R[1, 0] = y * x * v + z * s
    R[1, 1] = c + y * y * v
    R[1, 2] = y * z * v - x * s
    R[2, 0] = z * x * v - y * s
    R[2, 1] = z * y * v + x * s
    R[2, 2] = c + z * z * v
    return R


@maybe_njit
def fk_frames(axes, offsets, q):
    """Link frames: rotations Rs[i], joint origins os[i], world axes ws[i]."""
    n = q.shape[0]
    Rs = np.empty((n, 3, 3))
    os = np.empty((n, 3))
    ws = np.empty((n, 3))
    R_prev = np.eye(3)
    o_prev = np.zeros(3)
    for i in range(n):
        os[i] = o_prev + _mv3(R_prev, offsets[i])
        ws[i] = _mv3(R_prev, axes[i])
        Rs[i] = _mm33(R_prev, _rot_axis_angle(axes[i], q[i]))
        R_prev = Rs[i]
        o_prev = os[i]
    return Rs, os, ws


@maybe_njit
def ee_pose(Rs, os, ee_offset):
    n = os.shape[0]
    p = os[n - 1] + _mv3(Rs[n - 1], ee_offset)
    return Rs[n - 1], p


@maybe_njit
def jacobian_point(ws, os, p):
    """Geometric Jacobian (6,n) of the point p carried by the last link."""
    n = os.shape[0]
    J = np.empty((6, n))
    for i in range(n):
        col = _cross3(ws[i], p - os[i])
        J[0, i] = col[0]
        J[1, i] = col[1]
        J[2, i] = col[2]
        J[3, i] = ws[i, 0]
        J[4, i] = ws[i, 1]
        J[5, i] = ws[i, 2]
    return J


@maybe_njit
def mass_gravity(Rs, os, ws, masses, coms, inertias, gravity):
    """Joint-space inertia matrix and gravity torque from link frames."""
    n = os.shape[0]
    M = np.zeros((n, n))
    G = np.zeros(n)
    Jv = np.empty((n, 3))
    for k in range(n):
        ck = os[k] + _mv3(Rs[k], coms[k])
        Iw = _sandwich33(Rs[k], inertias[k])
        for i in range(k + 1):
            Jv[i] = _cross3(ws[i], ck - os[i])
        for i in range(k + 1):
            Iw_wi = _mv3(Iw, ws[i])
            G[i] -= masses[k] * _dot3(gravity, Jv[i])
            for j in range(i + 1):
                M[i, j] += masses[k] * _dot3(Jv[i], Jv[j]) + _dot3(Iw_wi, ws[j])
    for i in range(n):
        for j in range(i):
            M[j, i] = M[i, j]
    return M, G


@maybe_njit
def mass_matrix(axes, offsets, masses, coms, inertias, q):
    Rs, os, ws = fk_frames(axes, offsets, q)
    n = q.shape[0]
    M = np.zeros((n, n))
    Jv = np.empty((n, 3))
    for k in range(n):
        ck = os[k] + _mv3(Rs[k], coms[k])
        Iw = _sandwich33(Rs[k], inertias[k])
        for i in range(k + 1):
            Jv[i] = _cross3(ws[i], ck - os[i])
        for i in range(k + 1):
            Iw_wi = _mv3(Iw, ws[i])
            for j in range(i + 1):
                M[i, j] += masses[k] * _dot3(Jv[i], Jv[j]) + _dot3(Iw_wi, ws[j])
    for i in range(n):
        for j in range(i):
            M[j, i] = M[i, j]
    return M


@maybe_njit
def coriolis(axes, offsets, masses, coms, inertias, q, qd, h):
    """Coriolis matrix from Christoffel symbols of dM/dq (central differences).

    Guarantees qd^T (Mdot - 2C) qd = 0 up to the O(h^2) differencing error.
    """
    n = q.shape[0]
    dM = np.empty((n, n, n))
    qp = q.copy()
    for k in range(n):
        qk = q[k]
        qp[k] = qk + h
        Mp = mass_matrix(axes, offsets, masses, coms, inertias, qp)
        qp[k] = qk - h
        Mm = mass_matrix(axes, offsets, masses, coms, inertias, qp)
        qp[k] = qk
        dM[k] = (Mp - Mm) / (2.0 * h)
    C = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += (dM[k, i, j] + dM[j, i, k] - dM[i, j, k]) * qd[k]
            C[i, j] = 0.5 * acc
    return C


@maybe_njit
def jacobian_dot(ws, os, p_ee, qd):
    """Analytic dJ/dt of the end-effector Jacobian along the motion qd."""
    n = os.shape[0]
    omega = np.zeros(3)      # angular velocity of link i-1
    vo = np.empty((n, 3))    # velocity of joint-i origin
    wd = np.empty((n, 3))    # d/dt of world joint axes
    vo[0] = np.zeros(3)
    for i in range(n):
        if i > 0:
            vo[i] = vo[i - 1] + _cross3(omega, os[i] - os[i - 1])
        wd[i] = _cross3(omega, ws[i])
        omega = omega + qd[i] * ws[i]
    v_ee = vo[n - 1] + _cross3(omega, p_ee - os[n - 1])
    Jd = np.empty((6, n))
    for i in range(n):
        top = _cross3(wd[i], p_ee - os[i]) + _cross3(ws[i], v_ee - vo[i])
        Jd[0, i] = top[0]
        Jd[1, i] = top[1]
        Jd[2, i] = top[2]
        Jd[3, i] = wd[i, 0]
        Jd[4, i] = wd[i, 1]
        Jd[5, i] = wd[i, 2]
    return Jd


@maybe_njit
def friction_torque(Fc, Fs, Fv, vs, qd):
    n = qd.shape[0]
    tf = np.empty(n)
    for i in range(n):
        v = qd[i]
        s = 0.0
        if v > 0.0:
            s = 1.0
        elif v < 0.0:
            s = -1.0
        ex = np.exp(-v * v / vs[i])
        tf[i] = Fc[i] * s * (1.0 - ex) + Fs[i] * s * ex + Fv[i] * v
    return tf


@maybe_njit
def contact_wrench(kind, anchor, normal_or_center, radius, z_n, k_e, b_e,
                   damp_at_contact, r_off, r_R, R_ee, p_ee, v_b, w_b):
    """Surface wrench ON the robot, base frame, reduced about the wrist.

    Tool: partial sphere of radius r_R whose center sits r_off behind the
    wrist along the (pressing) tool z axis.  Normal force k_e * penetration
    along the outward normal; tangential damping -b_e * v_t opposing motion.
    """
    z_e = np.empty(3)
    z_e[0] = R_ee[0, 2]
    z_e[1] = R_ee[1, 2]
    z_e[2] = R_ee[2, 2]
    x_c = p_ee - r_off * z_e
    n_o = np.zeros(3)
    pen = 0.0
    if kind == PLANE:
        n_o = normal_or_center.copy()
        h = _dot3(n_o, x_c - anchor)
        pen = (r_R + z_n) - h
    else:
        rel = x_c - normal_or_center
        d = np.sqrt(_dot3(rel, rel))
        n_o = rel / d
        pen = (r_R + z_n) - (d - radius)
    f = np.zeros(3)
    tau = np.zeros(3)
    p_cont = x_c - r_R * n_o
    if pen <= 0.0:
        return f, tau, 0, 0.0, n_o, p_cont
    v_pt = v_b.copy()
    if damp_at_contact == 1:
        v_pt = v_pt + _cross3(w_b, p_cont - p_ee)
    v_t = v_pt - _dot3(n_o, v_pt) * n_o
    f = k_e * pen * n_o - b_e * v_t
    tau = _cross3(p_cont - p_ee, f)
    return f, tau, 1, pen, n_o, p_cont


@maybe_njit
def _qdd(axes, offsets, masses, coms, inertias, ee_offset, gravity,
         Fc, Fs, Fv, vs, fric_on,
         kind, anchor, noc, radius, z_n, k_e, b_e, damp_cp, r_off, r_R,
         q, qd, tau, h_chris):
    n = q.shape[0]
    Rs, os, ws = fk_frames(axes, offsets, q)
    R_ee, p_ee = ee_pose(Rs, os, ee_offset)
    J = jacobian_point(ws, os, p_ee)
    twist = np.zeros(6)
    for r in range(6):
        acc = 0.0
        for c in range(n):
            acc += J[r, c] * qd[c]
        twist[r] = acc
    f, tenv, _, _, _, _ = contact_wrench(
        kind, anchor, noc, radius, z_n, k_e, b_e, damp_cp, r_off, r_R,
        R_ee, p_ee, twist[:3].copy(), twist[3:].copy())
    M, G = mass_gravity(Rs, os, ws, masses, coms, inertias, gravity)
    C = coriolis(axes, offsets, masses, coms, inertias, q, qd, h_chris)
    rhs = np.empty(n)
    for i in range(n):
        acc = tau[i] - G[i]
        for j in range(n):
            acc -= C[i, j] * qd[j]
        for r in range(3):
            acc += J[r, i] * f[r] + J[r + 3, i] * tenv[r]
        rhs[i] = acc
    if fric_on == 1:
        rhs = rhs - friction_torque(Fc, Fs, Fv, vs, qd)
    return np.linalg.solve(M, rhs), M


@maybe_njit
def rk4_plant_step(axes, offsets, masses, coms, inertias, ee_offset, gravity,
                   Fc, Fs, Fv, vs, fric_on,
                   kind, anchor, noc, radius, z_n, k_e, b_e, damp_cp,
                   r_off, r_R, q, qd, tau, dt, h_chris):
    """One RK4 step of the plant with the commanded torque held constant.

    Returns (q_next, qd_next, ok) where ok = 0 flags an ill-conditioned
    inertia matrix (cond > 1e10, checked at the first stage).
    """
    k1v, M = _qdd(axes, offsets, masses, coms, inertias, ee_offset, gravity,
                  Fc, Fs, Fv, vs, fric_on, kind, anchor, noc, radius, z_n,
                  k_e, b_e, damp_cp, r_off, r_R, q, qd, tau, h_chris)
    evals = np.linalg.eigh(M)[0]
    ok = 1
    if evals[0] <= 0.0 or evals[-1] / evals[0] > 1e10:
        ok = 0
        return q, qd, ok
    k1q = qd

    q2 = q + 0.5 * dt * k1q
    qd2 = qd + 0.5 * dt * k1v
    k2v, _ = _qdd(axes, offsets, masses, coms, inertias, ee_offset, gravity,
                  Fc, Fs, Fv, vs, fric_on, kind, anchor, noc, radius, z_n,
                  k_e, b_e, damp_cp, r_off, r_R, q2, qd2, tau, h_chris)
    k2q = qd2

    q3 = q + 0.5 * dt * k2q
    qd3 = qd + 0.5 * dt * k2v
    k3v, _ = _qdd(axes, offsets, masses, coms, inertias, ee_offset, gravity,
                  Fc, Fs, Fv, vs, fric_on, kind, anchor, noc, radius, z_n,
                  k_e, b_e, damp_cp, r_off, r_R, q3, qd3, tau, h_chris)
    k3q = qd3

    q4 = q + dt * k3q
    qd4 = qd + dt * k3v
    k4v, _ = _qdd(axes, offsets, masses, coms, inertias, ee_offset, gravity,
                  Fc, Fs, Fv, vs, fric_on, kind, anchor, noc, radius, z_n,
                  k_e, b_e, damp_cp, r_off, r_R, q4, qd4, tau, h_chris)
    k4q = qd4

    q_next = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
    qd_next = qd + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return q_next, qd_next, ok
