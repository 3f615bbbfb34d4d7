import numpy as np
import pytest

from phri.environment import (ContactState, EndToolGeometry, EnvParams,
                              SurfaceModel, Wrench, contact_state,
                              environment_wrench)
from phri.errors import ConfigError
from phri.kernels import _rot_axis_angle

TOOL = EndToolGeometry(r_off=0.05, r_R=0.08)
PLANE = SurfaceModel(kind="plane", anchor=np.zeros(3), normal=np.array([0.0, 0.0, 1.0]))


def aligned_pose(height):
    """Tool pressing straight down onto the z=0 plane: z_e = -n_o."""
    R = _rot_axis_angle(np.array([1.0, 0.0, 0.0]), np.pi)  # ee z points down
    # wrist so that the sphere center sits at the given height above the plane
    p = np.array([0.0, 0.0, height - TOOL.r_off])  # center = p - r_off*z_e = p + r_off*z
    return R, p


def tilted_pose(height, theta):
    """Pressing pose misaligned by theta about the x axis."""
    R = _rot_axis_angle(np.array([1.0, 0.0, 0.0]), np.pi - theta)
    z_e = R[:, 2]
    center = np.array([0.0, 0.0, height])
    p = center + TOOL.r_off * z_e
    return R, p


class TestContactState:
    def test_above_plane_no_contact(self):
        R, p = aligned_pose(TOOL.r_R + 0.02)
        cs = contact_state(PLANE, TOOL, R, p)
        assert not cs.in_contact
        assert cs.penetration == 0.0

    def test_penetration_depth(self):
        d = 0.01
        R, p = aligned_pose(TOOL.r_R - d)
        cs = contact_state(PLANE, TOOL, R, p)
        assert cs.in_contact
        assert abs(cs.penetration - d) < 1e-12
        assert np.allclose(cs.normal, [0, 0, 1.0])

    def test_aligned_lever_is_desired_lever(self):
        R, p = aligned_pose(TOOL.r_R - 0.005)
        cs = contact_state(PLANE, TOOL, R, p)
        # r_e = (r_R - r_off) z_e in the ee frame when perfectly aligned
        assert np.allclose(cs.lever_ee, [0.0, 0.0, TOOL.desired_lever], atol=1e-12)

    def test_misalignment_equilibrium_identity(self):
        # ||r_off|| sin(theta_m) == ||r_e|| sin(theta_o) on the geometry
        for theta in (0.1, 0.25, 0.6):
            R, p = tilted_pose(TOOL.r_R - 0.004, theta)
            cs = contact_state(PLANE, TOOL, R, p)
            r_e_base = R @ cs.lever_ee
            s_o = np.linalg.norm(np.cross(r_e_base, -cs.normal)) / np.linalg.norm(r_e_base)
            lhs = TOOL.r_off * np.sin(theta)
            rhs = np.linalg.norm(cs.lever_ee) * s_o
            assert abs(lhs - rhs) < 1e-6


class TestEnvironmentWrench:
    def test_no_contact_zero(self):
        R, p = aligned_pose(TOOL.r_R + 0.05)
        w = environment_wrench(PLANE, EnvParams(k_e=506.0), TOOL, R, p,
                               np.zeros(3), np.zeros(3))
        assert np.array_equal(w.as_vec(), np.zeros(6))

    def test_table_stiffness_value(self):
        # k_e = 506 N/m and 0.01 m penetration: 5.06 N along the normal
        R, p = aligned_pose(TOOL.r_R - 0.01)
        w = environment_wrench(PLANE, EnvParams(k_e=506.0), TOOL, R, p,
                               np.zeros(3), np.zeros(3))
        assert abs(np.linalg.norm(w.f) - 5.06) < 1e-12
        # on-robot reaction: pressing gives a negative ee-frame z force
        assert w.f[2] < 0

    def test_aligned_frictionless_zero_torque(self):
        R, p = aligned_pose(TOOL.r_R - 0.01)
        w = environment_wrench(PLANE, EnvParams(k_e=506.0, b_e=0.0), TOOL, R, p,
                               np.zeros(3), np.zeros(3))
        assert np.linalg.norm(w.tau) < 1e-15

    def test_frictionless_force_parallel_normal(self):
        for theta in (0.0, 0.2, 0.5):
            R, p = tilted_pose(TOOL.r_R - 0.006, theta)
            cs = contact_state(PLANE, TOOL, R, p)
            w = environment_wrench(PLANE, EnvParams(k_e=506.0, b_e=0.0), TOOL,
                                   R, p, np.array([0.01, 0.02, -0.01]), np.zeros(3))
            f_base = R @ w.f
            cross = np.cross(f_base, cs.normal)
            assert np.linalg.norm(cross) < 1e-12 * max(1.0, np.linalg.norm(f_base))

    def test_torque_identity(self):
        R, p = tilted_pose(TOOL.r_R - 0.006, 0.3)
        cs = contact_state(PLANE, TOOL, R, p)
        w = environment_wrench(PLANE, EnvParams(k_e=506.0, b_e=40.0), TOOL, R, p,
                               np.array([0.02, -0.01, 0.005]), np.array([0.1, 0, 0]))
        assert np.allclose(w.tau, np.cross(cs.lever_ee, w.f), atol=1e-14)

    def test_damping_opposes_motion(self):
        R, p = aligned_pose(TOOL.r_R - 0.01)
        v = np.array([0.03, 0.0, 0.0])  # tangential slide
        w = environment_wrench(PLANE, EnvParams(k_e=506.0, b_e=100.0), TOOL,
                               R, p, v, np.zeros(3))
        f_base = R @ w.f
        # friction on the robot opposes the wrist velocity
        assert f_base[0] < 0
        assert abs(f_base[0] + 100.0 * 0.03) < 1e-12
        # dissipated power (on the robot) is negative
        assert f_base @ v < 0

    def test_spring_work_recoverable(self):
        # closed normal displacement cycle with b_e = 0: net work ~ 0
        env = EnvParams(k_e=506.0, b_e=0.0)
        n_steps = 4000
        ts = np.linspace(0, 2 * np.pi, n_steps + 1)
        depth = 0.005 + 0.004 * np.cos(ts)
        work = 0.0
        prev = None
        for d in depth:
            R, p = aligned_pose(TOOL.r_R - d)
            w = environment_wrench(PLANE, env, TOOL, R, p, np.zeros(3), np.zeros(3))
            fz_on_robot = (R @ w.f)[2]
            if prev is not None:
                dz = p[2] - prev[0]
                work += 0.5 * (fz_on_robot + prev[1]) * dz
            prev = (p[2], fz_on_robot)
        assert abs(work) < 1e-9

    def test_sphere_radial_normal(self):
        ball = SurfaceModel(kind="sphere", anchor=np.array([0.0, 0.0, -0.5]),
                            radius=0.4)
        R, _ = aligned_pose(0.0)
        # tool sphere center at ball_z + radius + r_R - pen; wrist r_off below it
        pen = 0.003
        center_z = -0.5 + 0.4 + TOOL.r_R - pen
        p = np.array([0.0, 0.0, center_z - TOOL.r_off])
        cs = contact_state(ball, TOOL, R, p)
        assert cs.in_contact
        assert np.allclose(cs.normal, [0, 0, 1.0], atol=1e-12)
        assert abs(cs.penetration - pen) < 1e-12

    def test_contact_point_damping_variant(self):
        R, p = tilted_pose(TOOL.r_R - 0.01, 0.2)
        w_wrist = environment_wrench(PLANE, EnvParams(k_e=506.0, b_e=50.0),
                                     TOOL, R, p, np.array([0.01, 0, 0]),
                                     np.array([0.0, 0.5, 0.0]))
        env_cp = EnvParams(k_e=506.0, b_e=50.0, damp_at_contact_point=True)
        w_cp = environment_wrench(PLANE, env_cp, TOOL, R, p,
                                  np.array([0.01, 0, 0]), np.array([0.0, 0.5, 0.0]))
        # with spin about y the lever term changes the tangential force
        assert not np.allclose(w_wrist.f, w_cp.f)


class TestValidation:
    def test_tool_geometry_invariant(self):
        with pytest.raises(ConfigError):
            EndToolGeometry(r_off=0.1, r_R=0.08)

    def test_surface_normal_must_be_unit(self):
        with pytest.raises(ConfigError):
            SurfaceModel(kind="plane", anchor=np.zeros(3), normal=np.array([0, 0, 2.0]))

    def test_env_params(self):
        with pytest.raises(ConfigError):
            EnvParams(k_e=-1.0)
        with pytest.raises(ConfigError):
            EnvParams(k_e=1.0, b_e=-2.0)

    def test_wrench_zero(self):
        assert np.array_equal(Wrench.zero().as_vec(), np.zeros(6))
