"""Spring-damper surface model and spherical end-tool contact geometry.

Geometry conventions (fixed once, used everywhere):
  * the tool z axis ``z_e`` points from the wrist toward the surface
    (pressing direction); perfect alignment means z_e = -n_o where n_o is
    the outward surface normal;
  * the tool is a partial sphere of radius ``r_R`` whose center of curvature
    sits ``r_off`` BEHIND the wrist: x_center = x_wrist - r_off * z_e, so the
    aligned lever from wrist to contact is (r_R - r_off) * z_e;
  * the returned wrench acts ON the robot (what a wrist F/T sensor reads),
    expressed in the end-effector frame; pressing therefore gives a negative
    force z component.  The positive "applied force" plotted and regulated
    by the controller is the negated z component.

The normal spring is unilateral (compression only); tangential damping
opposes the wrist velocity (the literal spring-damper law, with a config
switch for damping at the contact point instead).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError


@dataclass(frozen=True)
class EnvParams:
    k_e: float          # normal stiffness, N/m
    b_e: float = 0.0    # tangential damping, N s/m; 0 = frictionless mode
    damp_at_contact_point: bool = False

    def __post_init__(self):
        if self.k_e <= 0:
            raise ConfigError("env.k_e", "stiffness must be positive")
        if self.b_e < 0:
            raise ConfigError("env.b_e", "damping must be nonnegative")


@dataclass(frozen=True)
class EndToolGeometry:
    r_off: float  # wrist center to sphere center, m (behind the wrist)
    r_R: float    # tool sphere radius, m

    def __post_init__(self):
        if not (self.r_R > self.r_off >= 0.0):
            raise ConfigError("tool", f"need r_R > r_off >= 0, got r_R={self.r_R}, r_off={self.r_off}")

    @property
    def desired_lever(self) -> float:
        return self.r_R - self.r_off


@dataclass(frozen=True)
class SurfaceModel:
    """Plane (anchor point + outward unit normal) or sphere (center + radius).

    ``z_n`` is the neutral spring offset of the surface rest level along the
    normal (radially for the sphere).
    """

    kind: str
    anchor: np.ndarray
    normal: np.ndarray | None = None
    radius: float = 0.0
    z_n: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))
        if self.kind == "plane":
            n = np.asarray(self.normal, dtype=float)
            if abs(np.linalg.norm(n) - 1.0) > 1e-9:
                raise ConfigError("surface.normal", "must be a unit vector")
            object.__setattr__(self, "normal", n)
        elif self.kind == "sphere":
            if self.radius <= 0:
                raise ConfigError("surface.radius", "must be positive")
        else:
            raise ConfigError("surface.kind", f"unknown kind {self.kind!r}")

    def kernel_args(self):
        if self.kind == "plane":
            return kernels.PLANE, self.anchor, self.normal, 0.0, self.z_n
        return kernels.SPHERE, self.anchor, self.anchor, self.radius, self.z_n


@dataclass(frozen=True)
class Wrench:
    """Force/torque pair with an explicit frame tag ('ee' or 'base')."""

    f: np.ndarray
    tau: np.ndarray
    frame: str = "ee"

    def __post_init__(self):
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))

    def as_vec(self) -> np.ndarray:
        return np.concatenate([self.f, self.tau])

    @staticmethod
    def zero(frame: str = "ee") -> "Wrench":
        return Wrench(np.zeros(3), np.zeros(3), frame)


@dataclass(frozen=True)
class ContactState:
    in_contact: bool
    penetration: float
    point: np.ndarray        # contact point, base frame
    normal: np.ndarray       # outward surface normal n_o, base frame
    lever_ee: np.ndarray     # r_e = contact point - wrist, ee frame


def contact_state(surface: SurfaceModel, tool: EndToolGeometry,
                  R_ee: np.ndarray, p_ee: np.ndarray) -> ContactState:
    kind, anchor, noc, radius, z_n = surface.kernel_args()
    f, tau, flag, pen, n_o, p_cont = kernels.contact_wrench(
        kind, anchor, noc, radius, z_n, 1.0, 0.0, 0,
        tool.r_off, tool.r_R, R_ee, p_ee, np.zeros(3), np.zeros(3))
    return ContactState(
        in_contact=bool(flag),
        penetration=float(pen),
        point=p_cont,
        normal=n_o,
        lever_ee=R_ee.T @ (p_cont - p_ee),
    )


def environment_wrench(surface: SurfaceModel, env: EnvParams,
                       tool: EndToolGeometry, R_ee: np.ndarray,
                       p_ee: np.ndarray, v_b: np.ndarray,
                       w_b: np.ndarray) -> Wrench:
    """Interaction wrench ON the robot in the end-effector frame."""
    kind, anchor, noc, radius, z_n = surface.kernel_args()
    f, tau, flag, _, _, _ = kernels.contact_wrench(
        kind, anchor, noc, radius, z_n, env.k_e, env.b_e,
        int(env.damp_at_contact_point), tool.r_off, tool.r_R,
        R_ee, p_ee, np.asarray(v_b, dtype=float), np.asarray(w_b, dtype=float))
    if not flag:
        return Wrench.zero("ee")
    return Wrench(R_ee.T @ f, R_ee.T @ tau, "ee")
