"""Fixed-size linear algebra and rotation kernel shared by all modules.

Conventions (used consistently everywhere):
  * quaternions are scalar-first float64 arrays ``[w, x, y, z]``,
  * rotation matrices map end-effector-frame components to base-frame
    components (``v_base = R @ v_ee``),
  * twists stack translation over rotation: ``[v; omega]``.

All functions are pure; identical inputs give bit-identical outputs.
"""
from __future__ import annotations

import numpy as np

from .errors import NearSingular, NonUnitAxis, ZeroQuaternion

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])

COND_LIMIT = 1e8  # on J J^T; beyond this the step must abort


def skew(v: np.ndarray) -> np.ndarray:
    """3x3 matrix [v]_x with [v]_x @ w == cross(v, w)."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(q))
    if n < 1e-9:
        raise ZeroQuaternion(f"quaternion norm {n:.3e} below 1e-9")
    return q / n


def quat_to_rotation(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a (near-)unit quaternion; renormalizes internally."""
    w, x, y, z = quat_normalize(np.asarray(q, dtype=float))
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Unit quaternion (cos(a/2), sin(a/2) * axis); axis must be unit."""
    n = float(np.linalg.norm(axis))
    if abs(n - 1.0) > 1e-6:
        raise NonUnitAxis(f"axis norm {n:.8f} deviates from 1 beyond 1e-6")
    half = 0.5 * float(angle)
    q = np.empty(4)
    q[0] = np.cos(half)
    q[1:] = np.sin(half) * np.asarray(axis, dtype=float)
    return q


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a * b (scalar-first)."""
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_error(qd: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Attitude error e = qd^-1 * q, componentwise:

    e0 = q0*qd0 + q.qd ,  e = qd0*q - q0*qd + [q]_x qd
    so that rotation(e) == rotation(qd)^T @ rotation(q).
    """
    q0, qv = q[0], q[1:]
    qd0, qdv = qd[0], qd[1:]
    e = np.empty(4)
    e[0] = q0 * qd0 + qv @ qdv
    e[1:] = qd0 * qv - q0 * qdv + np.cross(qv, qdv)
    return quat_normalize(e)


def quat_scale_angle(q: np.ndarray, w: float) -> np.ndarray:
    """Quaternion of the same axis with its rotation angle scaled by w."""
    s = float(np.linalg.norm(q[1:]))
    if s < 1e-15 or w >= 1.0:
        return q.copy()
    phi = 2.0 * np.arctan2(s, q[0])
    out = np.empty(4)
    out[0] = np.cos(0.5 * w * phi)
    out[1:] = np.sin(0.5 * w * phi) * (q[1:] / s)
    return out


def pseudoinverse(J: np.ndarray) -> np.ndarray:
    """Right pseudoinverse J^T (J J^T)^-1 of a full-row-rank 6xn Jacobian.

    Raises NearSingular when cond(J J^T) exceeds 1e8; the caller must abort
    the step (singularities are assumed avoided, not damped through).
    """
    JJt = J @ J.T
    w = np.linalg.eigvalsh(JJt)
    if w[0] <= 0.0 or w[-1] / w[0] > COND_LIMIT:
        cond = np.inf if w[0] <= 0.0 else w[-1] / w[0]
        raise NearSingular(f"cond(J J^T) = {cond:.3e} exceeds {COND_LIMIT:.0e}")
    return np.linalg.solve(JJt, J).T


def block_rotation(R: np.ndarray) -> np.ndarray:
    """6x6 block-diagonal diag(R, R) acting on twists."""
    out = np.zeros((6, 6))
    out[:3, :3] = R
    out[3:, 3:] = R
    return out


def rotation_distance(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Angle (rad) of the relative rotation Ra^T Rb."""
    c = 0.5 * (np.trace(Ra.T @ Rb) - 1.0)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def rotation_to_quat(R: np.ndarray) -> np.ndarray:
    """Unit quaternion of a rotation matrix (Shepperd's branch selection),
    canonicalized to a nonnegative scalar part."""
    t = np.trace(R)
    q = np.empty(4)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        q[0] = 0.25 * s
        q[1] = (R[2, 1] - R[1, 2]) / s
        q[2] = (R[0, 2] - R[2, 0]) / s
        q[3] = (R[1, 0] - R[0, 1]) / s
    else:
        i = int(np.argmax([R[0, 0], R[1, 1], R[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(R[i, i] - R[j, j] - R[k, k] + 1.0) * 2.0
        q[0] = (R[k, j] - R[j, k]) / s
        q[i + 1] = 0.25 * s
        q[j + 1] = (R[j, i] + R[i, j]) / s
        q[k + 1] = (R[k, i] + R[i, k]) / s
    if q[0] < 0.0:
        q = -q
    return quat_normalize(q)
