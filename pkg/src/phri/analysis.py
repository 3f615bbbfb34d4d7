"""Post-hoc metrics: passivity work integrals, misalignment diagnostics,
attitude decay-rate fits, and steady-state error extraction.

All functions are pure over an immutable SimLog (or plain arrays).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .controller import ImpedanceParams, desired_rotation_rollout
from .environment import EndToolGeometry, EnvParams
from .errors import BasinViolation, WindowOutOfRange
from .simulator import SimLog

BASIN_LIMIT = 1.0 / np.sqrt(2.0)


@dataclass
class MetricsReport:
    work_total: float                  # J, work done by the robot on the environment
    work_excess: float                 # J, minus the commanded-slide dissipation
    work_tail_slope: float             # J/s, linear trend of W(t) over the tail
    excess_tail_slope: float           # J/s, same for W_excess(t)
    essential_dissipation: float       # J, integral of v_d^T B_e v_d
    reaching_time: float | None        # s, first time ||S|| < 1e-3 (NaN if never)
    force_error_max: float             # N, over the steady window
    force_error_rms: float
    velocity_error_max: float          # m/s, tangential components
    velocity_error_rms: float
    position_error_max: float          # m, || integral of e_v (x,y) ||
    quat_error_max: float              # norm of the active error quaternion vector
    theta_m_final: float               # rad
    r_tan_final: float                 # m
    r_tan_median: float                # m, median over the window (noise robust)
    window: tuple

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def _trapz_running(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def work_integrals(log: SimLog, env: EnvParams):
    """Running work W(t) by the robot on the environment and the excess
    W(t) - integral(v_d^T B_e v_d) over the commanded tangential profile.
    """
    t = log.t
    power = log["power"]
    W = _trapz_running(power, t)
    vd = np.stack([log["vd_x"], log["vd_y"]], axis=1) if len(t) else np.zeros((0, 2))
    diss_rate = env.b_e * np.sum(vd * vd, axis=1)
    D = _trapz_running(diss_rate, t)
    return W, W - D, D


def tail_slope(t: np.ndarray, y: np.ndarray, frac: float = 0.25) -> float:
    """Least-squares slope of y over the final ``frac`` of the time range."""
    if len(t) < 2:
        return 0.0
    t0 = t[-1] - frac * (t[-1] - t[0])
    sel = t >= t0
    if sel.sum() < 2:
        return 0.0
    A = np.stack([np.ones(sel.sum()), t[sel]], axis=1)
    coef, *_ = np.linalg.lstsq(A, y[sel], rcond=None)
    return float(coef[1])


def misalignment_metrics(log: SimLog, tool: EndToolGeometry,
                         force_threshold: float = 0.5,
                         use_measured: bool = True):
    """Per-sample misalignment angle and equivalent lever.

    theta_m = arcsin(||tau|| / (||f|| r_off)) clamped; r_tan is the lever
    projection length sqrt(tau_x^2 + tau_y^2) / |F_z|.  Samples without
    contact (or below the force threshold) are NaN.
    """
    pre = "f_meas" if use_measured else "f_true"
    pret = "tau_meas" if use_measured else "tau_true"
    f = log.block([f"{pre}_x", f"{pre}_y", f"{pre}_z"])
    tau = log.block([f"{pret}_x", f"{pret}_y", f"{pret}_z"])
    f_norm = np.linalg.norm(f, axis=1)
    t_norm = np.linalg.norm(tau, axis=1)
    valid = (log["in_contact"] > 0.5) & (f_norm >= force_threshold)
    theta = np.full(log.n_steps, np.nan)
    r_tan = np.full(log.n_steps, np.nan)
    fv = f_norm[valid]
    theta[valid] = np.arcsin(np.clip(t_norm[valid] / (fv * tool.r_off), 0.0, 1.0))
    txy = np.sqrt(tau[valid, 0] ** 2 + tau[valid, 1] ** 2)
    fz = np.abs(f[valid, 2])
    r_tan[valid] = np.where(fz > 1e-12, txy / np.maximum(fz, 1e-12), np.nan)
    return theta, r_tan


def lyapunov_value(quats: np.ndarray, omegas: np.ndarray,
                   ip: ImpedanceParams) -> np.ndarray:
    """V = q.q + (q0-1)^2 + r^T I_d r with r = omega + K_1 q."""
    qv = quats[:, 1:]
    r = omegas + qv * ip.K_1
    return (np.sum(qv * qv, axis=1) + (quats[:, 0] - 1.0) ** 2
            + np.sum(r * (r * ip.I_d), axis=1))


def decay_rate_bound(ip: ImpedanceParams) -> float:
    """Theoretical exponential rate min(min K_1, min Pbar)/max(2, max I_d)."""
    return float(min(ip.K_1.min(), ip.P_bar.min()) / max(2.0, ip.I_d.max()))


def fit_decay_rate(t: np.ndarray, V: np.ndarray, floor: float = 1e-10) -> float:
    """Least-squares slope of log V over the monotone decaying segment."""
    sel = V > floor
    t, V = t[sel], V[sel]
    if len(V) < 3:
        return np.inf
    # keep the leading monotone-decaying stretch
    upticks = np.flatnonzero(np.diff(V) > 0)
    end = upticks[0] + 1 if len(upticks) else len(V)
    t, V = t[:end], V[:end]
    if len(V) < 3:
        return np.inf
    A = np.stack([np.ones(len(t)), t], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(V), rcond=None)
    return float(-coef[1])


def lyapunov_decay(ip: ImpedanceParams, q0_vec: np.ndarray,
                   omega0: np.ndarray | None = None, dt: float = 1e-3,
                   duration: float = 3.0):
    """Integrate the isolated desired rotational dynamics and fit the V decay.

    Returns (gamma_hat, gamma_theory, t, V).  Raises BasinViolation when the
    initial attitude error is outside ||q(0)|| < 1/sqrt(2).
    """
    q0_vec = np.asarray(q0_vec, dtype=float)
    if np.linalg.norm(q0_vec) >= BASIN_LIMIT:
        raise BasinViolation(f"||q(0)|| = {np.linalg.norm(q0_vec):.4f} >= 1/sqrt(2)")
    if omega0 is None:
        omega0 = np.zeros(3)
    t, quats, omegas = desired_rotation_rollout(ip, q0_vec, omega0, dt, duration)
    V = lyapunov_value(quats, omegas, ip)
    return fit_decay_rate(t, V), decay_rate_bound(ip), t, V


def lyapunov_decay_from_log(log: SimLog, ip: ImpedanceParams,
                            window: tuple[float, float]):
    """Decay-rate fit of V over a log segment using the logged alignment
    quaternion and ee angular velocity."""
    sel = (log.t >= window[0]) & (log.t <= window[1])
    quats = log.block(["qerr_w", "qerr_x", "qerr_y", "qerr_z"])[sel]
    omegas = log.block(["we_x", "we_y", "we_z"])[sel]
    V = lyapunov_value(quats, omegas, ip)
    return fit_decay_rate(log.t[sel], V), V


def cfg_dt_slack(t: np.ndarray) -> float:
    """One grid interval of slack so window end == duration is accepted."""
    return float(t[1] - t[0]) if len(t) > 1 else 1e-12


def reaching_time(log: SimLog, threshold: float = 1e-3) -> float:
    """First time ||S|| drops below the threshold (NaN if never)."""
    S = log.block([f"S{i}" for i in range(7)])
    norms = np.linalg.norm(S, axis=1)
    idx = np.flatnonzero(norms < threshold)
    return float(log.t[idx[0]]) if len(idx) else float("nan")


def steady_state_metrics(log: SimLog, window: tuple[float, float],
                         tool: EndToolGeometry, env: EnvParams) -> MetricsReport:
    """Max-abs and RMS errors over the post-reaching window plus the
    passivity and misalignment summaries."""
    t = log.t
    if len(t) == 0 or window[0] < t[0] - 1e-12 or window[1] > t[-1] + cfg_dt_slack(t):
        raise WindowOutOfRange(f"window {window} outside log range "
                               f"[{t[0] if len(t) else 0}, {t[-1] if len(t) else 0}]")
    # half-open [t0, t1): a profile breakpoint at the window edge belongs to
    # the next segment's transient, not to this window's steady state
    sel = (t >= window[0]) & (t < window[1])

    f_err = (-log["f_meas_z"]) - log["fd_z"]
    fw = f_err[sel]
    ev = log.block(["ev_x", "ev_y"])[sel]
    iev = log.block(["iev_x", "iev_y"])[sel]
    qe = log.block(["qerr_x", "qerr_y", "qerr_z"])[sel]
    ev_norm = np.linalg.norm(ev, axis=1)
    pos_norm = np.linalg.norm(iev, axis=1)
    qe_norm = np.linalg.norm(qe, axis=1)

    W, Wx, D = work_integrals(log, env)
    theta, r_tan = misalignment_metrics(log, tool)
    theta_fin = theta[sel][np.isfinite(theta[sel])]
    rtan_fin = r_tan[sel][np.isfinite(r_tan[sel])]

    return MetricsReport(
        work_total=float(W[-1]) if len(W) else 0.0,
        work_excess=float(Wx[-1]) if len(Wx) else 0.0,
        work_tail_slope=tail_slope(t, W),
        excess_tail_slope=tail_slope(t, Wx),
        essential_dissipation=float(D[-1]) if len(D) else 0.0,
        reaching_time=reaching_time(log),
        force_error_max=float(np.max(np.abs(fw))),
        force_error_rms=float(np.sqrt(np.mean(fw ** 2))),
        velocity_error_max=float(np.max(ev_norm)),
        velocity_error_rms=float(np.sqrt(np.mean(ev_norm ** 2))),
        position_error_max=float(np.max(pos_norm)),
        quat_error_max=float(np.max(qe_norm)),
        theta_m_final=float(theta_fin[-1]) if len(theta_fin) else float("nan"),
        r_tan_final=float(rtan_fin[-1]) if len(rtan_fin) else float("nan"),
        r_tan_median=float(np.median(rtan_fin)) if len(rtan_fin) else float("nan"),
        window=tuple(window),
    )
