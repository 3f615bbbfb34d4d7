"""Kinematics, dynamics terms, joint friction, and forward dynamics of the
configurable serial chain, plus the uncertainty-bound calibration sweep.

Thin wrappers over :mod:`phri.kernels`; the module-level default step for the
Christoffel differencing is ``CHRISTOFFEL_H = 1e-6``.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .chain import DynamicsTerms, FrictionParams, JointState, KinematicChain
from .errors import IllConditionedInertia
from .spatial import block_rotation, pseudoinverse

CHRISTOFFEL_H = 1e-6
INERTIA_COND_LIMIT = 1e10


def forward_kinematics(chain: KinematicChain, q: np.ndarray):
    """End-effector pose (R, p) in the base frame."""
    Rs, os, _ = kernels.fk_frames(chain.axes, chain.offsets, np.asarray(q, dtype=float))
    return kernels.ee_pose(Rs, os, chain.ee_offset)


def frames(chain: KinematicChain, q: np.ndarray):
    """All link frames (Rs, origins, world axes) plus the ee pose."""
    Rs, os, ws = kernels.fk_frames(chain.axes, chain.offsets, np.asarray(q, dtype=float))
    R_ee, p_ee = kernels.ee_pose(Rs, os, chain.ee_offset)
    return Rs, os, ws, R_ee, p_ee


def jacobian(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    """Base-frame geometric Jacobian: J @ qdot = [v_b; w_b] at the ee."""
    Rs, os, ws = kernels.fk_frames(chain.axes, chain.offsets, np.asarray(q, dtype=float))
    _, p_ee = kernels.ee_pose(Rs, os, chain.ee_offset)
    return kernels.jacobian_point(ws, os, p_ee)


def jacobian_dot(chain: KinematicChain, q: np.ndarray, qdot: np.ndarray) -> np.ndarray:
    Rs, os, ws = kernels.fk_frames(chain.axes, chain.offsets, np.asarray(q, dtype=float))
    _, p_ee = kernels.ee_pose(Rs, os, chain.ee_offset)
    return kernels.jacobian_dot(ws, os, p_ee, np.asarray(qdot, dtype=float))


def dynamics_terms(chain: KinematicChain, q: np.ndarray, qdot: np.ndarray,
                   h: float = CHRISTOFFEL_H) -> DynamicsTerms:
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    Rs, os, ws = kernels.fk_frames(chain.axes, chain.offsets, q)
    M, G = kernels.mass_gravity(Rs, os, ws, chain.masses, chain.coms,
                                chain.inertias, chain.gravity)
    C = kernels.coriolis(chain.axes, chain.offsets, chain.masses, chain.coms,
                         chain.inertias, q, qdot, h)
    return DynamicsTerms(M=M, C=C, G=G)


def joint_friction(fp: FrictionParams, qdot: np.ndarray) -> np.ndarray:
    return kernels.friction_torque(fp.Fc, fp.Fs, fp.Fv, fp.vs,
                                   np.asarray(qdot, dtype=float))


def forward_dynamics(chain: KinematicChain, fp: FrictionParams | None,
                     state: JointState, tau: np.ndarray,
                     wrench_ee: np.ndarray | None = None) -> np.ndarray:
    """Joint acceleration under commanded torque and an ee-frame wrench.

    ``wrench_ee`` is the interaction wrench ON the robot expressed in the
    end-effector frame (sensor convention); None means free space.
    """
    terms = dynamics_terms(chain, state.q, state.qdot)
    w = np.linalg.eigvalsh(terms.M)
    if w[0] <= 0 or w[-1] / w[0] > INERTIA_COND_LIMIT:
        raise IllConditionedInertia(f"cond(M) = {w[-1] / max(w[0], 1e-300):.3e}")
    rhs = np.asarray(tau, dtype=float) - terms.C @ state.qdot - terms.G
    if wrench_ee is not None:
        R, _ = forward_kinematics(chain, state.q)
        J = jacobian(chain, state.q)
        rhs = rhs + J.T @ (block_rotation(R) @ np.asarray(wrench_ee, dtype=float))
    if fp is not None:
        rhs = rhs - joint_friction(fp, state.qdot)
    return np.linalg.solve(terms.M, rhs)


def com_positions(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    Rs, os, _ = kernels.fk_frames(chain.axes, chain.offsets, np.asarray(q, dtype=float))
    return os + np.einsum("nij,nj->ni", Rs, chain.coms)


def kinetic_energy(chain: KinematicChain, state: JointState) -> float:
    Rs, os, ws = kernels.fk_frames(chain.axes, chain.offsets, state.q)
    M, _ = kernels.mass_gravity(Rs, os, ws, chain.masses, chain.coms,
                                chain.inertias, chain.gravity)
    return 0.5 * float(state.qdot @ M @ state.qdot)


def potential_energy(chain: KinematicChain, q: np.ndarray) -> float:
    cs = com_positions(chain, q)
    return -float(np.sum(chain.masses * (cs @ chain.gravity)))


def lumped_uncertainty(chain: KinematicChain, fp: FrictionParams | None,
                       gravity_scale: float, inertia_scale: float,
                       inertia_joints: np.ndarray,
                       q: np.ndarray, qdot: np.ndarray,
                       vdot_d: np.ndarray) -> np.ndarray:
    """The lumped model-error acceleration the sliding mode must dominate:

    D = Mhat^-1 (-Gtilde + Utilde xd - Mtilde J+ Rbar vdot_d - tau_f).
    """
    terms = dynamics_terms(chain, q, qdot)
    scale = np.ones((chain.n, chain.n))
    if inertia_scale != 1.0 and len(inertia_joints):
        mask = np.zeros(chain.n, dtype=bool)
        mask[np.asarray(inertia_joints, dtype=int)] = True
        touched = mask[:, None] | mask[None, :]
        scale[touched] = inertia_scale
    M_hat = scale * terms.M
    G_hat = gravity_scale * terms.G
    R, _ = forward_kinematics(chain, q)
    J = jacobian(chain, q)
    Jd = jacobian_dot(chain, q, qdot)
    Jp = pseudoinverse(J)
    xd = J @ qdot
    Rbar = block_rotation(R)
    wb = xd[3:]
    Rbar_dot = np.zeros((6, 6))
    from .spatial import skew  # local import avoids a cycle at module load

    Rbar_dot[:3, :3] = skew(wb) @ R
    Rbar_dot[3:, 3:] = Rbar_dot[:3, :3]

    def u_of(M, C):
        return M @ Jp @ Jd @ Jp - C @ Jp - M @ Jp @ Rbar_dot @ Rbar.T

    U = u_of(terms.M, terms.C)
    U_hat = u_of(M_hat, terms.C)
    tau_f = joint_friction(fp, qdot) if fp is not None else np.zeros(chain.n)
    vbar = np.concatenate([vdot_d, np.zeros(3)])
    resid = (-(terms.G - G_hat) + (U - U_hat) @ xd
             - (terms.M - M_hat) @ (Jp @ (Rbar @ vbar)) - tau_f)
    return np.linalg.solve(M_hat, resid)


def calibrate_uncertainty_bound(chain: KinematicChain, fp: FrictionParams | None,
                                gravity_scale: float = 1.0,
                                inertia_scale: float = 1.0,
                                inertia_joints=(), n_samples: int = 1000,
                                qdot_max: float = 1.0, vdot_max: float = 0.05,
                                margin: float = 1.5, seed: int = 0,
                                center: np.ndarray | None = None,
                                span: float = 0.5):
    """Sweep random states over the operating envelope and certify
    (bD0, bD1, bD2) covering ||D||.

    States are drawn around ``center`` (default: mid joint range) within
    ``span`` rad per joint; near-singular poses are rejected since Property 1
    assumes they are avoided, not dominated.  Fits the quadratic envelope
    bD0 + bD1 s + bD2 s^2 (s = ||qdot||) over per-bin maxima of ||D||,
    inflates it until every sample is covered, then applies ``margin``.
    Returns (bD0, bD1, bD2, worst_ratio); worst_ratio <= 1 certifies the
    bound on the sweep.
    """
    from .errors import NearSingular

    rng = np.random.default_rng(seed)
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    if center is None:
        center = 0.5 * (lo + hi)
    center = np.asarray(center, dtype=float)
    s_vals = np.empty(n_samples)
    d_vals = np.empty(n_samples)
    joints = np.asarray(inertia_joints, dtype=int)
    k = 0
    while k < n_samples:
        q = np.clip(center + rng.uniform(-span, span, chain.n), lo, hi)
        # mixed velocity scales anchor the envelope near s = 0 as well
        qdot = rng.uniform(0.0, qdot_max) * rng.uniform(-1.0, 1.0, chain.n)
        vdot = rng.uniform(-vdot_max, vdot_max, 3)
        J = jacobian(chain, q)
        w = np.linalg.eigvalsh(J @ J.T)
        if w[0] <= 0 or w[-1] / w[0] > 1e5:
            continue
        try:
            D = lumped_uncertainty(chain, fp, gravity_scale, inertia_scale,
                                   joints, q, qdot, vdot)
        except NearSingular:
            continue
        s_vals[k] = np.linalg.norm(qdot)
        d_vals[k] = np.linalg.norm(D)
        k += 1
    # tightest quadratic upper envelope: minimize its mean over the sweep
    # subject to covering every per-bin maximum (small LP)
    from scipy.optimize import linprog

    bins = np.linspace(0.0, s_vals.max() + 1e-9, 16)
    idx = np.digitize(s_vals, bins)
    xs, ys = [], []
    for b in np.unique(idx):
        sel = idx == b
        xs.append(s_vals[sel][np.argmax(d_vals[sel])])
        ys.append(d_vals[sel].max())
    A = np.stack([np.ones(len(xs)), np.array(xs), np.array(xs) ** 2], axis=1)
    res = linprog(c=A.mean(axis=0), A_ub=-A, b_ub=-np.array(ys),
                  bounds=[(0, None)] * 3, method="highs")
    coef = res.x if res.success else np.array([max(ys), 0.0, 0.0])
    coef[0] = max(coef[0], 1e-6)
    bound = coef[0] + coef[1] * s_vals + coef[2] * s_vals ** 2
    worst = np.max(d_vals / bound)
    if worst > 1.0:
        coef = coef * worst
    coef = coef * margin
    worst_ratio = float(np.max(d_vals / (coef[0] + coef[1] * s_vals + coef[2] * s_vals ** 2)))
    return float(coef[0]), float(coef[1]), float(coef[2]), worst_ratio
