"""Serial-chain description and the documented default 7-DOF arm.

Joint i (0-based) is revolute about a fixed unit axis expressed in the frame
of link i-1, mounted after a fixed translation ``offset[i]`` (also in the
parent frame; all fixed rotations are identity).  The end-effector frame is
link 6's frame translated by ``ee_offset`` along its local axes; its local z
axis is the tool pressing direction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class FrictionParams:
    """Stribeck joint friction coefficients, one entry per joint.

    tau_f,i = Fc_i sgn(qd_i)(1 - exp(-qd_i^2/vs_i))
            + Fs_i sgn(qd_i) exp(-qd_i^2/vs_i) + Fv_i qd_i,   sgn(0) = 0.
    """

    Fc: np.ndarray
    Fs: np.ndarray
    Fv: np.ndarray
    vs: np.ndarray

    def __post_init__(self):
        for name in ("Fc", "Fs", "Fv", "vs"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if np.any(arr < 0):
                raise ConfigError(f"friction.{name}", "coefficients must be nonnegative")
        if np.any(self.vs <= 0):
            raise ConfigError("friction.vs", "Stribeck parameters must be positive")

    @staticmethod
    def zero(n: int) -> "FrictionParams":
        z = np.zeros(n)
        return FrictionParams(z, z, z, np.full(n, 1.0))


@dataclass(frozen=True)
class KinematicChain:
    axes: np.ndarray          # (n,3) unit joint axes in parent frame
    offsets: np.ndarray       # (n,3) parent-frame translation to joint origin, m
    masses: np.ndarray        # (n,) link masses, kg
    coms: np.ndarray          # (n,3) link COM in link frame, m
    inertias: np.ndarray      # (n,3,3) link rotational inertia about COM, kg m^2
    ee_offset: np.ndarray     # (3,) flange->ee translation in link-n frame, m
    gravity: np.ndarray       # (3,) gravity acceleration in base frame, m/s^2
    joint_limits: np.ndarray  # (n,2) rad

    def __post_init__(self):
        for name, shape in (
            ("axes", (self.n, 3)),
            ("offsets", (self.n, 3)),
            ("coms", (self.n, 3)),
            ("inertias", (self.n, 3, 3)),
        ):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            if arr.shape != shape:
                raise ConfigError(f"chain.{name}", f"expected shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)
        for name in ("masses", "ee_offset", "gravity"):
            object.__setattr__(
                self, name, np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            )
        object.__setattr__(
            self, "joint_limits", np.asarray(self.joint_limits, dtype=float).reshape(self.n, 2)
        )
        norms = np.linalg.norm(self.axes, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ConfigError("chain.axes", "joint axes must be unit vectors")
        if np.any(self.masses <= 0):
            raise ConfigError("chain.masses", "link masses must be positive")
        for i in range(self.n):
            I = self.inertias[i]
            if np.max(np.abs(I - I.T)) > 1e-12 or np.min(np.linalg.eigvalsh(I)) <= 0:
                raise ConfigError("chain.inertias", f"link {i} inertia not symmetric positive definite")

    @property
    def n(self) -> int:
        return int(np.asarray(self.axes).shape[0])

    def packed(self) -> tuple:
        """Arrays in kernel-call order."""
        return (self.axes, self.offsets, self.masses, self.coms, self.inertias,
                self.ee_offset, self.gravity)


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).copy())
        object.__setattr__(self, "qdot", np.asarray(self.qdot, dtype=float).copy())
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot))):
            raise ConfigError("initial_state", "joint state must be finite")


@dataclass(frozen=True)
class DynamicsTerms:
    M: np.ndarray
    C: np.ndarray
    G: np.ndarray


def _cylinder_inertia(mass: float, length: float, radius: float = 0.05) -> np.ndarray:
    """Solid cylinder about its COM, axis along local z; sphere when length ~ 0."""
    if length < 1e-6:
        i = 0.4 * mass * radius * radius
        return np.diag([i, i, i])
    ixx = mass * (3.0 * radius * radius + length * length) / 12.0
    izz = 0.5 * mass * radius * radius
    return np.diag([ixx, ixx, izz])


def default_chain() -> KinematicChain:
    """The pinned 7-DOF reference arm.

    Alternating z/y revolute axes; segment lengths 0.27/0.36/0.37/0.23 m
    placed before joints 1, 3, 5, 7; masses 5/4/3/2.5/2/1.5/1 kg; solid
    cylinder inertias.  Home pose (q = 0) points the tool z straight up the
    base z at height 1.28 m.
    """
    axes = np.array(
        [
            [0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    lengths = [0.27, 0.0, 0.36, 0.0, 0.37, 0.0, 0.23]
    offsets = np.array([[0.0, 0.0, L] for L in lengths])
    masses = np.array([5.0, 4.0, 3.0, 2.5, 2.0, 1.5, 1.0])
    ee_offset = np.array([0.0, 0.0, 0.05])
    # COM halfway down the following segment (next offset, or the flange)
    next_seg = lengths[1:] + [float(ee_offset[2])]
    coms = np.array([[0.0, 0.0, 0.5 * s] for s in next_seg])
    inertias = np.stack([_cylinder_inertia(m, s) for m, s in zip(masses, next_seg)])
    limits = np.tile([-2.9, 2.9], (7, 1))
    return KinematicChain(
        axes=axes,
        offsets=offsets,
        masses=masses,
        coms=coms,
        inertias=inertias,
        ee_offset=ee_offset,
        gravity=np.array([0.0, 0.0, -9.81]),
        joint_limits=limits,
    )


TABLE_FRICTION = FrictionParams(
    Fc=np.array([0.07, 0.07, 0.07, 0.07, 0.014, 0.014, 0.0035]),
    Fs=np.array([0.14, 0.14, 0.14, 0.14, 0.028, 0.028, 0.007]),
    Fv=np.array([0.13, 0.13, 0.13, 0.13, 0.026, 0.026, 0.013]),
    vs=np.array([0.01, 0.01, 0.01, 0.01, 0.01, 0.005, 0.005]),
)
