"""Two-loop hybrid force/velocity/attitude controller.

Inner loop: computed torque plus sliding-mode compensation of the lumped
model uncertainty.  Outer loop: translational impedance with force tracking
along the tool z axis, and quaternion attitude shaping that aligns the tool
with the (unknown) surface using only wrench feedback.

Wrench convention: all wrench inputs are the interaction wrench ON the robot
in the end-effector frame (sensor convention).  Because the tool z axis
presses INTO the surface, the regulated "applied force" is the negated force
z component, and the force error entering the translational impedance is
(desired - applied); see the environment module docstring.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .environment import EndToolGeometry
from .errors import ConfigError, NoContact
from .spatial import (IDENTITY_QUAT, block_rotation, pseudoinverse,
                      quat_error, quat_from_axis_angle, quat_scale_angle, skew)

FRICTIONLESS = "frictionless"
FRICTIONAL = "frictional"
TORQUE_ERROR = "torque_error"


@dataclass(frozen=True)
class ImpedanceParams:
    """Desired end-effector dynamics (diagonals of the target matrices)."""

    M_d: np.ndarray   # translational mass, kg
    B_d: np.ndarray   # translational damping, N s/m
    K_d: np.ndarray   # translational stiffness, N/m; z entry must be 0
    I_d: np.ndarray   # rotational inertia, kg m^2
    K_1: np.ndarray   # attitude-rate coupling gain
    P_bar: np.ndarray

    def __post_init__(self):
        for name in ("M_d", "B_d", "K_d", "I_d", "K_1", "P_bar"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.K_d[2] != 0.0:
            raise ConfigError("impedance.K_d", "z entry must be exactly 0 (force-controlled axis)")
        for name in ("M_d", "B_d", "I_d", "K_1", "P_bar"):
            if np.any(getattr(self, name) <= 0):
                raise ConfigError(f"impedance.{name}", "diagonal entries must be positive")
        if np.any(self.K_d[:2] <= 0):
            raise ConfigError("impedance.K_d", "x/y entries must be positive")


@dataclass(frozen=True)
class SmcParams:
    bD0: float
    bD1: float
    bD2: float
    alpha: float
    K: np.ndarray                    # per-joint proportional gain on S
    phi: float = 0.05                # tanh boundary-layer width
    Q_floor: np.ndarray | None = None  # per-joint switching-gain floor
    mode: str = "tanh"               # "tanh" (practical) or "sign" (ideal)

    def __post_init__(self):
        object.__setattr__(self, "K", np.asarray(self.K, dtype=float))
        if self.Q_floor is not None:
            object.__setattr__(self, "Q_floor", np.asarray(self.Q_floor, dtype=float))
        if self.alpha <= 0:
            raise ConfigError("smc.alpha", "reaching gain must be positive")
        if min(self.bD0, self.bD1, self.bD2) < 0:
            raise ConfigError("smc.bD", "uncertainty bound coefficients must be nonnegative")
        if self.mode not in ("tanh", "sign"):
            raise ConfigError("smc.mode", f"unknown mode {self.mode!r}")
        if self.phi <= 0:
            raise ConfigError("smc.phi", "boundary layer width must be positive")


@dataclass(frozen=True)
class AlignmentParams:
    mode: str = FRICTIONLESS
    r_m: float = 0.1                 # known upper bound on the lever norm, m
    torque_deadband: float = 1e-4    # N m
    force_threshold: float = 0.5     # N
    B_d_omega: np.ndarray = field(default_factory=lambda: np.array([2.0, 2.0, 2.0]))

    def __post_init__(self):
        object.__setattr__(self, "B_d_omega", np.asarray(self.B_d_omega, dtype=float))
        if self.mode not in (FRICTIONLESS, FRICTIONAL, TORQUE_ERROR):
            raise ConfigError("alignment.mode", f"unknown mode {self.mode!r}")
        if self.torque_deadband <= 0 or self.force_threshold <= 0:
            raise ConfigError("alignment", "deadband thresholds must be positive")

    def validate_tool(self, tool: EndToolGeometry):
        if self.r_m < tool.r_R:
            raise ConfigError("alignment.r_m", "must upper-bound the tool sphere radius")


def velocity_error(v_e: np.ndarray, w_e: np.ndarray, v_d: np.ndarray) -> np.ndarray:
    """Twist error in the ee frame: [v_e - v_d; w_e] (desired rate is zero)."""
    out = np.empty(6)
    out[:3] = v_e - v_d
    out[3:] = w_e
    return out


def translational_aux(ip: ImpedanceParams, e_v: np.ndarray, int_ev: np.ndarray,
                      e_f: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Translational impedance acceleration, rotated to the base frame."""
    return R @ ((-ip.B_d * e_v - ip.K_d * int_ev + e_f) / ip.M_d)


def extract_alignment_frictionless(tau_e: np.ndarray, f_ee: np.ndarray,
                                   tool: EndToolGeometry,
                                   ap: AlignmentParams) -> np.ndarray:
    """Misalignment quaternion from the measured wrench (frictionless surface).

    Axis n = -tau_e/||tau_e||, angle arcsin(||tau_e|| / (||f|| r_off)); the
    arcsin argument is clamped to [0, 1] against measurement noise.
    """
    f_norm = float(np.linalg.norm(f_ee))
    if f_norm < ap.force_threshold:
        raise NoContact(f"|f| = {f_norm:.3f} N below threshold {ap.force_threshold} N")
    t_norm = float(np.linalg.norm(tau_e))
    if t_norm < ap.torque_deadband:
        return IDENTITY_QUAT.copy()
    axis = -tau_e / t_norm
    theta = np.arcsin(min(t_norm / (f_norm * tool.r_off), 1.0))
    return quat_from_axis_angle(axis, theta)


def _wrench_quaternion(tau: np.ndarray, f_norm: float, r_m: float,
                       deadband: float) -> np.ndarray:
    t_norm = float(np.linalg.norm(tau))
    if t_norm < deadband:
        return IDENTITY_QUAT.copy()
    axis = -tau / t_norm
    theta = np.arcsin(min(t_norm / (r_m * f_norm), 1.0))
    return quat_from_axis_angle(axis, theta)


def extract_alignment_frictional(tau_e: np.ndarray, f_ee: np.ndarray,
                                 tool: EndToolGeometry, ap: AlignmentParams):
    """Measured and desired wrench quaternions plus their error (frictional).

    The unknown lever norm is replaced by the bound r_m; the desired torque
    is the one a perfectly aligned tool would measure, tau_d = r_d x f with
    r_d = (r_R - r_off) z_e.  Returns (q_hat, q_d_hat, e_hat).
    """
    f_norm = float(np.linalg.norm(f_ee))
    if f_norm < ap.force_threshold:
        raise NoContact(f"|f| = {f_norm:.3f} N below threshold {ap.force_threshold} N")
    tau_d = np.cross(tool.desired_lever * np.array([0.0, 0.0, 1.0]), f_ee)
    q_hat = _wrench_quaternion(tau_e, f_norm, ap.r_m, ap.torque_deadband)
    q_d_hat = _wrench_quaternion(tau_d, f_norm, ap.r_m, ap.torque_deadband)
    e_hat = quat_error(q_d_hat, q_hat)
    return q_hat, q_d_hat, e_hat


def desired_torque(tool: EndToolGeometry, f_ee: np.ndarray) -> np.ndarray:
    return np.cross(tool.desired_lever * np.array([0.0, 0.0, 1.0]), f_ee)


def rotational_aux(ip: ImpedanceParams, quat: np.ndarray, w_e: np.ndarray,
                   R: np.ndarray) -> np.ndarray:
    """Attitude-shaping acceleration from the active alignment quaternion.

    Implements the desired rotational dynamics
    I_d wdot + 0.5 (q0 I_d K_1 + 2 Pbar + [q]x) w = -(Pbar K_1 + I) q
    for both the frictionless quaternion and the frictional error quaternion.
    """
    q0, qv = quat[0], quat[1:]
    tau_a = -(ip.P_bar * ip.K_1 + 1.0) * qv
    Bw = 0.5 * (q0 * np.diag(ip.I_d * ip.K_1) + 2.0 * np.diag(ip.P_bar) + skew(qv))
    return R @ ((tau_a - Bw @ w_e) / ip.I_d)


def rotational_aux_torque_error(ip: ImpedanceParams, B_d_omega: np.ndarray,
                                e_tau: np.ndarray, w_e: np.ndarray,
                                R: np.ndarray) -> np.ndarray:
    """Practical variant: drive the raw torque error tau_e - tau_d to zero."""
    return R @ ((e_tau - B_d_omega * w_e) / ip.I_d)


def smc_gain(sp: SmcParams, qdot: np.ndarray) -> np.ndarray:
    """Per-joint switching gain dominating the calibrated uncertainty bound."""
    s = float(np.linalg.norm(qdot))
    base = sp.bD0 + sp.bD1 * s + sp.bD2 * s * s + sp.alpha
    Q = np.full(qdot.shape[0], base)
    if sp.Q_floor is not None:
        Q = np.maximum(Q, sp.Q_floor)
    return Q


def smc_aux(sp: SmcParams, Q: np.ndarray, S: np.ndarray, a_x: np.ndarray,
            Jp: np.ndarray) -> np.ndarray:
    """Joint-space auxiliary control: task map of a_x minus the switching term.

    Ideal mode uses the discontinuous sign law; the practical default adds a
    proportional term and smooths the switch with a tanh boundary layer.
    """
    if sp.mode == "sign":
        return Jp @ a_x - Q * np.sign(S)
    return Jp @ a_x - sp.K * S - Q * np.tanh(S / sp.phi)


@dataclass
class ControllerState:
    """Integrator and measurement state owned by one controller instance."""

    int_ev: np.ndarray
    s_acc: np.ndarray
    prev_ev: np.ndarray | None = None
    prev_s_integrand: np.ndarray | None = None
    last_wrench: np.ndarray | None = None

    @staticmethod
    def zero(n: int) -> "ControllerState":
        return ControllerState(int_ev=np.zeros(3), s_acc=np.zeros(n))


class HybridController:
    """Single-owner stepping wrapper around the pure control laws."""

    def __init__(self, ip: ImpedanceParams, sp: SmcParams, ap: AlignmentParams,
                 tool: EndToolGeometry, n_joints: int):
        ap.validate_tool(tool)
        self.ip = ip
        self.sp = sp
        self.ap = ap
        self.tool = tool
        self.n = n_joints
        self.state = ControllerState.zero(n_joints)

    def reset(self):
        self.state = ControllerState.zero(self.n)

    def _activation(self, f_norm: float) -> float:
        """Smooth contact-onset blend: 0 below the force threshold, 1 above
        twice the threshold.  Removes the a_x discontinuity that would
        otherwise kick the sliding variable by O(dt) at first contact."""
        return min(max(f_norm / self.ap.force_threshold - 1.0, 0.0), 1.0)

    def alignment(self, wrench_meas: np.ndarray):
        """Active/desired/error quaternions for the configured mode."""
        f_ee, tau_e = wrench_meas[:3], wrench_meas[3:]
        ident = IDENTITY_QUAT.copy()
        w = self._activation(float(np.linalg.norm(f_ee)))
        if w == 0.0:
            return ident, ident.copy(), ident.copy()
        if self.ap.mode == FRICTIONLESS:
            q = quat_scale_angle(
                extract_alignment_frictionless(tau_e, f_ee, self.tool, self.ap), w)
            return q, ident, q.copy()
        q, qd, e = extract_alignment_frictional(tau_e, f_ee, self.tool, self.ap)
        return q, qd, quat_scale_angle(e, w)

    def step(self, q, qdot, R, J, Jd, wrench_meas, v_d, vdot_d, f_dz,
             M_hat, C_hat, G_hat, dt):
        """One control update; returns (tau, trace dict).

        May raise NearSingular (propagated from the pseudoinverse); the
        caller aborts the run.
        """
        st = self.state
        xdot = J @ qdot
        v_e = R.T @ xdot[:3]
        w_e = R.T @ xdot[3:]
        e = velocity_error(v_e, w_e, v_d)

        # trapezoidal velocity-error integral
        if st.prev_ev is not None:
            st.int_ev = st.int_ev + 0.5 * dt * (st.prev_ev + e[:3])
        st.prev_ev = e[:3].copy()

        applied_fz = -wrench_meas[2]
        e_f = np.array([0.0, 0.0, f_dz - applied_fz])
        a_xv = translational_aux(self.ip, e[:3], st.int_ev, e_f, R)

        q_align, q_des, q_err = self.alignment(wrench_meas)
        if self.ap.mode == TORQUE_ERROR:
            w = self._activation(float(np.linalg.norm(wrench_meas[:3])))
            e_tau = w * (wrench_meas[3:] - desired_torque(self.tool, wrench_meas[:3]))
            a_xw = rotational_aux_torque_error(self.ip, self.ap.B_d_omega, e_tau, w_e, R)
        elif self.ap.mode == FRICTIONAL:
            a_xw = rotational_aux(self.ip, q_err, w_e, R)
        else:
            a_xw = rotational_aux(self.ip, q_align, w_e, R)
        a_x = np.concatenate([a_xv, a_xw])

        Rbar = block_rotation(R)
        Om = skew(xdot[3:])
        Rbar_dot = np.zeros((6, 6))
        Rbar_dot[:3, :3] = Om @ R
        Rbar_dot[3:, 3:] = Rbar_dot[:3, :3]
        vbar_d = np.concatenate([v_d, np.zeros(3)])
        vbar_dd = np.concatenate([vdot_d, np.zeros(3)])

        Jp = pseudoinverse(J)
        g = Jp @ (Jd @ (Jp @ xdot) - Rbar @ vbar_dd - Rbar_dot @ e
                  - Rbar_dot @ vbar_d - a_x)
        if st.prev_s_integrand is not None:
            st.s_acc = st.s_acc + 0.5 * dt * (st.prev_s_integrand + g)
        st.prev_s_integrand = g.copy()
        S = qdot + st.s_acc

        Q = smc_gain(self.sp, qdot)
        a_j = smc_aux(self.sp, Q, S, a_x, Jp)

        U_hat = M_hat @ Jp @ Jd @ Jp - C_hat @ Jp - M_hat @ Jp @ Rbar_dot @ Rbar.T
        tau = (M_hat @ a_j - J.T @ (Rbar @ wrench_meas) + G_hat
               - U_hat @ xdot + M_hat @ (Jp @ (Rbar @ vbar_dd)))
        st.last_wrench = wrench_meas.copy()

        trace = {
            "e": e, "int_ev": st.int_ev.copy(), "e_f": e_f, "a_x": a_x,
            "S": S, "a_j": a_j, "q_align": q_align, "q_des": q_des,
            "q_err": q_err, "applied_fz": applied_fz,
        }
        return tau, trace


def desired_rotation_rollout(ip: ImpedanceParams, q0_vec: np.ndarray,
                             omega0: np.ndarray, dt: float, duration: float):
    """Integrate the isolated desired rotational dynamics (attitude shaping
    law + unit-quaternion kinematics) with RK4.

    Returns (t, quats, omegas) sampled every step.  Used by the decay-rate
    diagnostics; the closed-loop controller never calls this.
    """
    q0_vec = np.asarray(q0_vec, dtype=float)
    n0 = float(np.linalg.norm(q0_vec))
    quat = np.empty(4)
    quat[0] = np.sqrt(max(0.0, 1.0 - n0 * n0))
    quat[1:] = q0_vec
    w = np.asarray(omega0, dtype=float).copy()

    def deriv(quat, w):
        q0, qv = quat[0], quat[1:]
        tau_a = -(ip.P_bar * ip.K_1 + 1.0) * qv
        Bw = 0.5 * (q0 * np.diag(ip.I_d * ip.K_1) + 2.0 * np.diag(ip.P_bar) + skew(qv))
        wdot = (tau_a - Bw @ w) / ip.I_d
        dq = np.empty(4)
        dq[0] = -0.5 * (w @ qv)
        dq[1:] = 0.5 * (q0 * w + np.cross(qv, w))
        return dq, wdot

    n_steps = int(round(duration / dt))
    ts = np.arange(n_steps + 1) * dt
    quats = np.empty((n_steps + 1, 4))
    omegas = np.empty((n_steps + 1, 3))
    quats[0], omegas[0] = quat, w
    for k in range(n_steps):
        d1q, d1w = deriv(quat, w)
        d2q, d2w = deriv(quat + 0.5 * dt * d1q, w + 0.5 * dt * d1w)
        d3q, d3w = deriv(quat + 0.5 * dt * d2q, w + 0.5 * dt * d2w)
        d4q, d4w = deriv(quat + dt * d3q, w + dt * d3w)
        quat = quat + (dt / 6.0) * (d1q + 2 * d2q + 2 * d3q + d4q)
        w = w + (dt / 6.0) * (d1w + 2 * d2w + 2 * d3w + d4w)
        quat = quat / np.linalg.norm(quat)
        quats[k + 1], omegas[k + 1] = quat, w
    return ts, quats, omegas
