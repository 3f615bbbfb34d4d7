"""Canonical scenario builders and surface placement.

Four shipped configs: ``frictionless`` (planar, non-dissipative, clean
model), ``frictional`` (planar, full disturbance set), and the spherical
``ball_align`` / ``ball_move`` analogues.  The surface pose is derived from
the initial arm pose: the tool starts 2 cm above the surface with its z axis
tilted 15 degrees away from anti-parallel to the outward normal.
"""
from __future__ import annotations

import os

import numpy as np

from . import robot
from .chain import TABLE_FRICTION, JointState, default_chain
from .config import save_config
from .controller import AlignmentParams, ImpedanceParams, SmcParams
from .environment import EndToolGeometry, EnvParams, SurfaceModel
from .kernels import _rot_axis_angle
from .simulator import ScenarioConfig

# Table-based gain set used by every scenario
IMPEDANCE = dict(
    M_d=[1.0, 1.0, 10.0],
    B_d=[10.0, 10.0, 70.0],
    K_d=[30.0, 30.0, 0.0],
    I_d=[0.3, 0.3, 0.3],
    K_1=[10.0, 10.0, 10.0],
    P_bar=[4.0, 4.0, 4.0],
)
Q_FLOOR = [24.0, 48.0, 48.0, 60.0, 72.0, 72.0, 84.0]

# Uncertainty-bound coefficients from the calibration sweep (x1.5 margin);
# regenerate with `phri validate --config configs/frictional.json`.  The large
# constant term is breakaway friction acting on the small wrist inertias.
BD_CLEAN = (2e-06, 0.0, 0.0)               # perfect model: no lumped uncertainty
BD_FULL = (59.708, 1.025, 2.943)           # 3% gravity + 20% inertia + joint friction

DEFAULT_Q0 = np.array([0.0, 0.45, 0.0, 1.1, 0.0, 0.9, 0.0])
TOOL = EndToolGeometry(r_off=0.05, r_R=0.08)
GAP = 0.02
TILT = np.deg2rad(15.0)


def surface_normal_from_pose(R_ee: np.ndarray, tilt: float = TILT) -> np.ndarray:
    """Outward normal tilted away from perfect alignment about the tool x axis."""
    z_e = R_ee[:, 2]
    axis = R_ee[:, 0]
    return -(_rot_axis_angle(axis, tilt) @ z_e)


def plane_under_tool(chain, q0, tool: EndToolGeometry, gap: float = GAP,
                     tilt: float = TILT) -> SurfaceModel:
    R, p = robot.forward_kinematics(chain, q0)
    n_o = surface_normal_from_pose(R, tilt)
    x_c = p - tool.r_off * R[:, 2]
    anchor = x_c - (tool.r_R + gap) * n_o
    return SurfaceModel(kind="plane", anchor=anchor, normal=n_o / np.linalg.norm(n_o))


def ball_under_tool(chain, q0, tool: EndToolGeometry, radius: float,
                    gap: float = GAP, tilt: float = TILT) -> SurfaceModel:
    R, p = robot.forward_kinematics(chain, q0)
    n_o = surface_normal_from_pose(R, tilt)
    x_c = p - tool.r_off * R[:, 2]
    center = x_c - (tool.r_R + radius + gap) * n_o
    return SurfaceModel(kind="sphere", anchor=center, radius=radius)


def _base(name: str, seed: int, **kw) -> dict:
    chain = default_chain()
    d = dict(
        name=name,
        seed=seed,
        dt=1e-3,
        duration=40.0,
        chain=chain,
        tool=TOOL,
        impedance=ImpedanceParams(**{k: np.array(v) for k, v in IMPEDANCE.items()}),
        initial_state=JointState(q=DEFAULT_Q0, qdot=np.zeros(7)),
        force_amplitude=10.0,
        force_rate=0.2,
    )
    d.update(kw)
    return d


def frictionless_config(seed: int = 2024) -> ScenarioConfig:
    """Planar non-dissipative scenario: clean model, no noise, b_e = 0."""
    chain = default_chain()
    return ScenarioConfig(**_base(
        "frictionless", seed,
        friction=None,
        surface=plane_under_tool(chain, DEFAULT_Q0, TOOL),
        env=EnvParams(k_e=506.0, b_e=0.0),
        smc=SmcParams(*BD_CLEAN, alpha=0.5, K=np.full(7, 10.0), phi=0.05, mode="tanh"),
        alignment=AlignmentParams(mode="frictionless"),
        velocity_segments=((5.0, 20.0, 0.0, 0.015), (20.0, 35.0, 0.0, -0.015)),
        metrics_window=(10.0, 20.0),
    ))


def frictional_config(seed: int = 2025) -> ScenarioConfig:
    """Planar dissipative scenario with the full disturbance set."""
    chain = default_chain()
    return ScenarioConfig(**_base(
        "frictional", seed,
        friction=TABLE_FRICTION,
        surface=plane_under_tool(chain, DEFAULT_Q0, TOOL),
        env=EnvParams(k_e=506.0, b_e=100.0),
        smc=SmcParams(*BD_FULL, alpha=2.0, K=np.full(7, 10.0), phi=0.05,
                      Q_floor=np.array(Q_FLOOR), mode="tanh"),
        alignment=AlignmentParams(mode="frictional", r_m=0.2),
        velocity_segments=((5.0, 20.0, 0.0, 0.015), (20.0, 35.0, 0.0, -0.015)),
        velocity_ramp=0.5,
        noise_mean=-0.0001,
        noise_std=0.0315,
        gravity_scale=0.97,
        inertia_scale=1.2,
        inertia_joints=(4, 5, 6),
        filter_window=45,
        metrics_window=(15.0, 35.0),
    ))


def _ball_common(name: str, seed: int, radius: float = 0.3) -> dict:
    chain = default_chain()
    return _base(
        name, seed,
        friction=TABLE_FRICTION,
        surface=ball_under_tool(chain, DEFAULT_Q0, TOOL, radius),
        # yoga-ball analogue: same stiffness, light tangential damping
        env=EnvParams(k_e=506.0, b_e=10.0),
        smc=SmcParams(*BD_FULL, alpha=2.0, K=np.full(7, 10.0), phi=0.05,
                      Q_floor=np.array(Q_FLOOR), mode="tanh"),
        alignment=AlignmentParams(mode="frictional", r_m=0.2),
        noise_mean=-0.0001,
        noise_std=0.0315,
        gravity_scale=0.97,
        inertia_scale=1.2,
        inertia_joints=(4, 5, 6),
        filter_window=45,
    )


def ball_align_config(seed: int = 2026) -> ScenarioConfig:
    """Spherical surface, zero commanded velocity: pure alignment."""
    d = _ball_common("ball_align", seed)
    d["duration"] = 30.0
    d["metrics_window"] = (20.0, 30.0)
    return ScenarioConfig(**d)


def ball_move_config(seed: int = 2027) -> ScenarioConfig:
    """Spherical surface with out-and-back tangential strokes.

    Stroke length is desk-scale (9 cm of arc each way): longer strokes walk
    the 7-DOF arm through ill-conditioned folds it cannot recover from
    without null-space objectives (which are out of scope, b = 0).  The
    final segment is motion-free so the lever settles to its static value.
    """
    d = _ball_common("ball_move", seed)
    d["velocity_segments"] = ((10.0, 16.0, 0.0, 0.015), (16.0, 28.0, 0.0, -0.015),
                              (28.0, 34.0, 0.0, 0.015))
    d["velocity_ramp"] = 0.5
    d["metrics_window"] = (18.0, 34.0)
    return ScenarioConfig(**d)


CANONICAL = {
    "frictionless": frictionless_config,
    "frictional": frictional_config,
    "ball_align": ball_align_config,
    "ball_move": ball_move_config,
}


def write_canonical_configs(out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, builder in CANONICAL.items():
        path = os.path.join(out_dir, f"{name}.json")
        save_config(path, builder())
        paths.append(path)
    return paths


if __name__ == "__main__":
    import sys

    write_canonical_configs(sys.argv[1] if len(sys.argv) > 1 else "configs")
