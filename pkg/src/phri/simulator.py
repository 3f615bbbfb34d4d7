"""Deterministic fixed-step closed-loop simulation.

One step = measure (true wrench + seeded noise + moving-average filter),
run the controller (zero-order-hold torque), log, then one RK4 step of the
rigid-body plant with the environment wrench evaluated inside the stages.
Identical (config, seed) produce bit-identical logs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels, robot
from .chain import FrictionParams, JointState, KinematicChain
from .controller import (AlignmentParams, HybridController, ImpedanceParams,
                         SmcParams)
from .environment import EndToolGeometry, EnvParams, SurfaceModel
from .errors import ConfigError, IllConditionedInertia, NearSingular
from .spatial import rotation_to_quat

log = logging.getLogger("phri.simulator")

RNG_NAME = "numpy.PCG64"


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that determines a run; see docs/formats.md for the JSON schema."""

    name: str
    seed: int
    dt: float
    duration: float
    chain: KinematicChain
    friction: FrictionParams | None
    surface: SurfaceModel
    env: EnvParams
    tool: EndToolGeometry
    impedance: ImpedanceParams
    smc: SmcParams
    alignment: AlignmentParams
    initial_state: JointState
    force_amplitude: float = 10.0           # f_dz(t) = A (1 - exp(-rate t))
    force_rate: float = 0.2
    velocity_segments: tuple = ()           # ((t0, t1, vdx, vdy), ...)
    velocity_ramp: float = 0.0              # s; 0 = hard steps with vdot_d = 0
    noise_mean: float = 0.0
    noise_std: float = 0.0
    noise_on_qdot: bool = False
    gravity_scale: float = 1.0              # controller gravity model = scale * G
    inertia_scale: float = 1.0              # controller inertia rows/cols scale
    inertia_joints: tuple = ()
    filter_window: int = 1
    controller_divider: int = 1
    metrics_window: tuple | None = None   # (t0, t1) for steady-state metrics

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt", "must be positive")
        if self.duration < 0:
            raise ConfigError("duration", "must be nonnegative")
        if self.filter_window < 1:
            raise ConfigError("filter_window", "must be >= 1")
        if self.controller_divider < 1:
            raise ConfigError("controller_divider", "must be >= 1")
        segs = tuple(tuple(float(x) for x in s) for s in self.velocity_segments)
        prev_end = -np.inf
        for s in segs:
            if len(s) != 4 or s[1] <= s[0]:
                raise ConfigError("velocity_segments", f"bad segment {s}")
            if s[0] < prev_end:
                raise ConfigError("velocity_segments", "segments must be ordered and non-overlapping")
            prev_end = s[1]
        object.__setattr__(self, "velocity_segments", segs)
        object.__setattr__(self, "inertia_joints", tuple(int(j) for j in self.inertia_joints))
        if self.metrics_window is not None:
            w = (float(self.metrics_window[0]), float(self.metrics_window[1]))
            if not (0.0 <= w[0] < w[1] <= self.duration + 1e-9):
                raise ConfigError("metrics_window", f"window {w} outside [0, duration]")
            object.__setattr__(self, "metrics_window", w)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


def desired_profiles(cfg: ScenarioConfig, t: float):
    """(v_d, vdot_d, f_dz) at time t; v_d is ee-frame with zero z component.

    Piecewise-constant segments; when ``velocity_ramp`` > 0 each transition
    is a linear ramp of that duration (giving a nonzero vdot_d there),
    otherwise steps are hard and vdot_d is identically zero.
    """
    f_dz = cfg.force_amplitude * (1.0 - np.exp(-cfg.force_rate * t))

    def target(time: float) -> np.ndarray:
        for t0, t1, vx, vy in cfg.velocity_segments:
            if t0 <= time < t1:
                return np.array([vx, vy, 0.0])
        return np.zeros(3)

    r = cfg.velocity_ramp
    if r <= 0.0:
        return target(t), np.zeros(3), float(f_dz)
    # ramp from the value before each boundary toward the current target
    bounds = sorted({b for seg in cfg.velocity_segments for b in seg[:2]})
    v_now = target(t)
    for b in bounds:
        if b <= t < b + r:
            v_prev = target(b - 1e-12) if b > 0 else np.zeros(3)
            frac = (t - b) / r
            v = v_prev + frac * (v_now - v_prev)
            return v, (v_now - v_prev) / r, float(f_dz)
    return v_now, np.zeros(3), float(f_dz)


def model_error_scale(n: int, inertia_scale: float, inertia_joints) -> np.ndarray:
    """Symmetric elementwise factor inflating rows/cols of the touched joints."""
    F = np.ones((n, n))
    if inertia_scale != 1.0 and len(inertia_joints):
        mask = np.zeros(n, dtype=bool)
        mask[list(inertia_joints)] = True
        F[mask[:, None] | mask[None, :]] = inertia_scale
    return F


def apply_model_errors(cfg: ScenarioConfig, M: np.ndarray, C: np.ndarray,
                       G: np.ndarray):
    """Controller-side estimates (M_hat, C_hat, G_hat) from the true terms."""
    F = model_error_scale(cfg.chain.n, cfg.inertia_scale, cfg.inertia_joints)
    return F * M, C, cfg.gravity_scale * G


class MovingAverage:
    """Per-component moving average over the last ``window`` samples."""

    def __init__(self, window: int, dim: int):
        self.window = int(window)
        self.buf = np.zeros((self.window, dim))
        self.count = 0
        self.idx = 0

    def push(self, x: np.ndarray) -> np.ndarray:
        self.buf[self.idx] = x
        self.idx = (self.idx + 1) % self.window
        self.count = min(self.count + 1, self.window)
        return self.buf[: self.count].mean(axis=0)


COLUMNS = (
    ["t"]
    + [f"q{i}" for i in range(7)]
    + [f"qd{i}" for i in range(7)]
    + ["px", "py", "pz"]
    + ["quat_w", "quat_x", "quat_y", "quat_z"]
    + ["ve_x", "ve_y", "ve_z", "we_x", "we_y", "we_z"]
    + ["f_true_x", "f_true_y", "f_true_z", "tau_true_x", "tau_true_y", "tau_true_z"]
    + ["f_meas_x", "f_meas_y", "f_meas_z", "tau_meas_x", "tau_meas_y", "tau_meas_z"]
    + ["ev_x", "ev_y", "ev_z", "iev_x", "iev_y", "iev_z"]
    + [f"S{i}" for i in range(7)]
    + [f"ax{i}" for i in range(6)]
    + [f"aj{i}" for i in range(7)]
    + ["qa_w", "qa_x", "qa_y", "qa_z"]
    + ["qdes_w", "qdes_x", "qdes_y", "qdes_z"]
    + ["qerr_w", "qerr_x", "qerr_y", "qerr_z"]
    + [f"tau{i}" for i in range(7)]
    + ["fd_z", "vd_x", "vd_y", "in_contact", "penetration", "power"]
)

_COL_INDEX = {name: i for i, name in enumerate(COLUMNS)}


@dataclass
class SimLog:
    """Uniform-grid per-step record matrix plus run metadata."""

    data: np.ndarray
    meta: dict = field(default_factory=dict)
    columns: tuple = tuple(COLUMNS)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, _COL_INDEX[name]]

    def block(self, names) -> np.ndarray:
        return self.data[:, [_COL_INDEX[n] for n in names]]

    @property
    def t(self) -> np.ndarray:
        return self["t"]

    @property
    def n_steps(self) -> int:
        return self.data.shape[0]


class Simulation:
    """Mutable state of one scenario run."""

    def __init__(self, cfg: ScenarioConfig):
        n = cfg.chain.n
        if len(cfg.initial_state.q) != n:
            raise ConfigError("initial_state.q", f"expected {n} joints")
        self.cfg = cfg
        self.q = cfg.initial_state.q.copy()
        self.qdot = cfg.initial_state.qdot.copy()
        self.controller = HybridController(cfg.impedance, cfg.smc, cfg.alignment,
                                           cfg.tool, n)
        self.rng = np.random.default_rng(cfg.seed)
        self.filter = MovingAverage(cfg.filter_window, 6)
        self.tau = np.zeros(n)
        self.step_index = 0
        self.steady_contact_since: float | None = None
        self.contact_losses = 0
        self._limit_warned = False
        fric = cfg.friction if cfg.friction is not None else FrictionParams.zero(n)
        self._fric_on = 1 if cfg.friction is not None else 0
        kind, anchor, noc, radius, z_n = cfg.surface.kernel_args()
        self._plant_args = (
            *cfg.chain.packed(), fric.Fc, fric.Fs, fric.Fv, fric.vs, self._fric_on,
            kind, anchor, noc, radius, z_n, cfg.env.k_e, cfg.env.b_e,
            int(cfg.env.damp_at_contact_point), cfg.tool.r_off, cfg.tool.r_R,
        )

    def measure(self, wrench_true: np.ndarray) -> np.ndarray:
        noisy = wrench_true
        if self.cfg.noise_std > 0.0 or self.cfg.noise_mean != 0.0:
            noisy = wrench_true + self.rng.normal(self.cfg.noise_mean,
                                                  self.cfg.noise_std, 6)
        return self.filter.push(noisy)

    def step(self, t: float) -> np.ndarray:
        """Advance one dt; returns the log row recorded at time t."""
        cfg = self.cfg
        chain = cfg.chain
        Rs, os, ws, R, p = robot.frames(chain, self.q)
        J = kernels.jacobian_point(ws, os, p)
        Jd = kernels.jacobian_dot(ws, os, p, self.qdot)
        xdot = J @ self.qdot
        v_e, w_e = R.T @ xdot[:3], R.T @ xdot[3:]

        kind, anchor, noc, radius, z_n = cfg.surface.kernel_args()
        f_b, tau_b, flag, pen, _, _ = kernels.contact_wrench(
            kind, anchor, noc, radius, z_n, cfg.env.k_e, cfg.env.b_e,
            int(cfg.env.damp_at_contact_point), cfg.tool.r_off, cfg.tool.r_R,
            R, p, xdot[:3], xdot[3:])
        wrench_true = np.concatenate([R.T @ f_b, R.T @ tau_b])
        wrench_meas = self.measure(wrench_true)

        v_d, vdot_d, f_dz = desired_profiles(cfg, t)

        qdot_meas = self.qdot
        if cfg.noise_on_qdot and cfg.noise_std > 0.0:
            qdot_meas = self.qdot + self.rng.normal(cfg.noise_mean, cfg.noise_std,
                                                    chain.n)

        if self.step_index % cfg.controller_divider == 0:
            M, G = kernels.mass_gravity(Rs, os, ws, chain.masses, chain.coms,
                                        chain.inertias, chain.gravity)
            C = kernels.coriolis(chain.axes, chain.offsets, chain.masses,
                                 chain.coms, chain.inertias, self.q, qdot_meas,
                                 robot.CHRISTOFFEL_H)
            M_hat, C_hat, G_hat = apply_model_errors(cfg, M, C, G)
            self.tau, trace = self.controller.step(
                self.q, qdot_meas, R, J, Jd, wrench_meas, v_d, vdot_d, f_dz,
                M_hat, C_hat, G_hat, cfg.dt * cfg.controller_divider)
            self._trace = trace
        trace = self._trace

        power = -(wrench_true[:3] @ v_e + wrench_true[3:] @ w_e)

        if flag:
            if self.steady_contact_since is None:
                self.steady_contact_since = t
        elif self.steady_contact_since is not None:
            if t - self.steady_contact_since > 0.5:
                self.contact_losses += 1
                log.warning("contact lost at t=%.3f s after steady contact", t)
            self.steady_contact_since = None

        if not self._limit_warned and (
                np.any(self.q < chain.joint_limits[:, 0])
                or np.any(self.q > chain.joint_limits[:, 1])):
            self._limit_warned = True
            log.warning("joint limits exceeded at t=%.3f s", t)

        row = np.concatenate([
            [t], self.q, self.qdot, p, rotation_to_quat(R), v_e, w_e,
            wrench_true, wrench_meas, trace["e"][:3], trace["int_ev"],
            trace["S"], trace["a_x"], trace["a_j"], trace["q_align"],
            trace["q_des"], trace["q_err"], self.tau,
            [f_dz, v_d[0], v_d[1], float(flag), pen, power],
        ])
        if not np.all(np.isfinite(row)):
            bad = [COLUMNS[i] for i in np.flatnonzero(~np.isfinite(row))[:5]]
            raise FloatingPointError(f"non-finite state at t={t:.4f}s: {bad}")

        q2, qd2, ok = kernels.rk4_plant_step(*self._plant_args, self.q, self.qdot,
                                             self.tau, cfg.dt, robot.CHRISTOFFEL_H)
        if not ok:
            raise IllConditionedInertia(f"plant inertia ill-conditioned at t={t:.4f}s")
        self.q, self.qdot = q2, qd2
        self.step_index += 1
        return row


def run_scenario(cfg: ScenarioConfig) -> SimLog:
    """Run the full scenario; on a controller abort the partial log is kept
    and the abort is recorded in ``meta``."""
    sim = Simulation(cfg)
    n_steps = int(round(cfg.duration / cfg.dt))
    rows = np.empty((n_steps, len(COLUMNS)))
    meta = {
        "scenario": cfg.name,
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "dt": cfg.dt,
        "duration": cfg.duration,
        "backend": __import__("phri._accel", fromlist=["BACKEND"]).BACKEND,
    }
    done = 0
    try:
        for k in range(n_steps):
            rows[k] = sim.step(k * cfg.dt)
            done += 1
    except (NearSingular, IllConditionedInertia, FloatingPointError) as exc:
        meta["abort"] = {"step": done, "t": done * cfg.dt,
                         "error": type(exc).__name__, "message": str(exc)}
        log.error("run aborted: %s", exc)
    meta["contact_losses"] = sim.contact_losses
    return SimLog(data=rows[:done], meta=meta)
