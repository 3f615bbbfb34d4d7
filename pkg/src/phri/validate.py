"""Model oracle suite backing `phri validate`.

Independent checks of the dynamics implementation: energy conservation in
free fall, Coriolis skew-symmetry, Jacobian finite differences, inertia
positive definiteness, and the uncertainty-bound calibration sweep.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, robot
from .chain import FrictionParams, KinematicChain

ENERGY_TOL = 1e-6
SKEW_TOL = 1e-8
JAC_TOL = 1e-5


@dataclass
class OracleReport:
    energy_residual: float
    skew_residual: float
    jacobian_residual: float
    min_inertia_eig: float
    bD: tuple
    bD_worst_ratio: float

    @property
    def passed(self) -> bool:
        return (self.energy_residual < ENERGY_TOL
                and self.skew_residual < SKEW_TOL
                and self.jacobian_residual < JAC_TOL
                and self.min_inertia_eig > 0.0
                and self.bD_worst_ratio <= 1.0)

    def lines(self):
        def mark(ok):
            return "ok " if ok else "FAIL"

        yield f"[{mark(self.energy_residual < ENERGY_TOL)}] energy audit residual " \
              f"{self.energy_residual:.3e} (< {ENERGY_TOL:.0e})"
        yield f"[{mark(self.skew_residual < SKEW_TOL)}] skew-symmetry residual " \
              f"{self.skew_residual:.3e} (< {SKEW_TOL:.0e})"
        yield f"[{mark(self.jacobian_residual < JAC_TOL)}] jacobian FD residual " \
              f"{self.jacobian_residual:.3e} (< {JAC_TOL:.0e})"
        yield f"[{mark(self.min_inertia_eig > 0)}] min inertia eigenvalue " \
              f"{self.min_inertia_eig:.3e} (> 0)"
        yield f"[{mark(self.bD_worst_ratio <= 1.0)}] uncertainty bound bD=" \
              f"({self.bD[0]:.4f}, {self.bD[1]:.4f}, {self.bD[2]:.4f}) " \
              f"covers sweep (worst ratio {self.bD_worst_ratio:.3f})"


def _random_states(chain: KinematicChain, n: int, seed: int, qdot_max: float = 1.0):
    rng = np.random.default_rng(seed)
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    qs = rng.uniform(0.6 * lo, 0.6 * hi, (n, chain.n))
    qds = rng.uniform(-qdot_max, qdot_max, (n, chain.n))
    return qs, qds


def energy_audit(chain: KinematicChain, duration: float = 1.0,
                 dt: float = 1e-3) -> float:
    """Free fall with no torque, friction, or contact: total energy drift
    relative to the peak kinetic energy."""
    from .chain import JointState

    q = 0.3 * np.ones(chain.n)
    qd = np.zeros(chain.n)
    fric = FrictionParams.zero(chain.n)
    far_anchor = np.array([0.0, 0.0, -1e6])
    normal = np.array([0.0, 0.0, 1.0])
    e0 = robot.kinetic_energy(chain, JointState(q, qd)) + robot.potential_energy(chain, q)
    drift, peak_ke = 0.0, 0.0
    tau = np.zeros(chain.n)
    for _ in range(int(round(duration / dt))):
        q, qd, ok = kernels.rk4_plant_step(
            *chain.packed(), fric.Fc, fric.Fs, fric.Fv, fric.vs, 0,
            kernels.PLANE, far_anchor, normal, 0.0, 0.0, 1.0, 0.0, 0,
            0.05, 0.08, q, qd, tau, dt, robot.CHRISTOFFEL_H)
        ke = robot.kinetic_energy(chain, JointState(q, qd))
        e = ke + robot.potential_energy(chain, q)
        drift = max(drift, abs(e - e0))
        peak_ke = max(peak_ke, ke)
    return drift / max(peak_ke, 1.0)


def skew_symmetry_sweep(chain: KinematicChain, n: int = 1000, seed: int = 1,
                        eps: float = 1e-6) -> float:
    """max |qd^T (Mdot - 2C) qd| with Mdot from central differences along qd."""
    qs, qds = _random_states(chain, n, seed)
    worst = 0.0
    for q, qd in zip(qs, qds):
        Mp = kernels.mass_matrix(chain.axes, chain.offsets, chain.masses,
                                 chain.coms, chain.inertias, q + eps * qd)
        Mm = kernels.mass_matrix(chain.axes, chain.offsets, chain.masses,
                                 chain.coms, chain.inertias, q - eps * qd)
        Mdot = (Mp - Mm) / (2.0 * eps)
        C = kernels.coriolis(chain.axes, chain.offsets, chain.masses, chain.coms,
                             chain.inertias, q, qd, robot.CHRISTOFFEL_H)
        worst = max(worst, abs(float(qd @ (Mdot - 2.0 * C) @ qd)))
    return worst


def jacobian_fd_sweep(chain: KinematicChain, n: int = 200, seed: int = 2,
                      h: float = 1e-6) -> float:
    """max twist mismatch between J qd and central differences of the pose."""
    qs, qds = _random_states(chain, n, seed)
    worst = 0.0
    for q, qd in zip(qs, qds):
        J = robot.jacobian(chain, q)
        tw = J @ qd
        Rp, pp = robot.forward_kinematics(chain, q + h * qd)
        Rm, pm = robot.forward_kinematics(chain, q - h * qd)
        v_fd = (pp - pm) / (2.0 * h)
        A = Rp @ Rm.T
        w_fd = np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]])
        w_fd = w_fd / (2.0 * (2.0 * h))
        worst = max(worst, float(np.max(np.abs(tw - np.concatenate([v_fd, w_fd])))))
    return worst


def inertia_pd_sweep(chain: KinematicChain, n: int = 1000, seed: int = 3) -> float:
    qs, _ = _random_states(chain, n, seed)
    worst = np.inf
    for q in qs:
        M = kernels.mass_matrix(chain.axes, chain.offsets, chain.masses,
                                chain.coms, chain.inertias, q)
        worst = min(worst, float(np.linalg.eigvalsh(M)[0]))
    return worst


def run_oracles(chain: KinematicChain, fp: FrictionParams | None,
                gravity_scale: float = 1.0, inertia_scale: float = 1.0,
                inertia_joints=(), sweep_size: int = 1000,
                seed: int = 0, center=None) -> OracleReport:
    bD0, bD1, bD2, worst = robot.calibrate_uncertainty_bound(
        chain, fp, gravity_scale, inertia_scale, inertia_joints,
        n_samples=max(100, sweep_size // 5), seed=seed, center=center)
    return OracleReport(
        energy_residual=energy_audit(chain),
        skew_residual=skew_symmetry_sweep(chain, sweep_size, seed + 1),
        jacobian_residual=jacobian_fd_sweep(chain, max(100, sweep_size // 5), seed + 2),
        min_inertia_eig=inertia_pd_sweep(chain, sweep_size, seed + 3),
        bD=(bD0, bD1, bD2),
        bD_worst_ratio=worst,
    )
