import numpy as np
import pytest

from phri import kernels, robot
from phri.chain import (TABLE_FRICTION, FrictionParams, JointState,
                        KinematicChain, default_chain)
from phri.errors import IllConditionedInertia
from phri.validate import (energy_audit, inertia_pd_sweep, jacobian_fd_sweep,
                           skew_symmetry_sweep)


def single_joint_chain():
    return KinematicChain(
        axes=np.array([[0.0, 0.0, 1.0]]),
        offsets=np.array([[0.0, 0.0, 0.1]]),
        masses=np.array([1.0]),
        coms=np.array([[0.05, 0.0, 0.0]]),
        inertias=np.diag([0.01, 0.01, 0.005])[None],
        ee_offset=np.array([0.2, 0.0, 0.0]),
        gravity=np.array([0.0, 0.0, -9.81]),
        joint_limits=np.array([[-np.pi, np.pi]]),
    )


class TestForwardKinematics:
    def test_home_pose(self, chain):
        # all fixed offsets stack along z: 0.27+0.36+0.37+0.23+0.05
        R, p = robot.forward_kinematics(chain, np.zeros(7))
        assert np.allclose(R, np.eye(3), atol=1e-15)
        assert np.allclose(p, [0.0, 0.0, 1.28], atol=1e-15)

    def test_last_joint_spins_in_place(self, chain, rng):
        q = rng.uniform(-1, 1, 7)
        q2 = q.copy()
        q2[6] += 0.7
        R1, p1 = robot.forward_kinematics(chain, q)
        R2, p2 = robot.forward_kinematics(chain, q2)
        # joint 7 axis passes through the flange: position is unchanged
        assert np.allclose(p1, p2, atol=1e-14)
        assert not np.allclose(R1, R2, atol=1e-3)

    def test_pose_continuity(self, chain, rng):
        q = rng.uniform(-1, 1, 7)
        for _ in range(20):
            d = 1e-4 * rng.normal(size=7)
            _, p1 = robot.forward_kinematics(chain, q)
            _, p2 = robot.forward_kinematics(chain, q + d)
            assert np.linalg.norm(p2 - p1) <= 2.0 * np.linalg.norm(d)


class TestJacobian:
    def test_single_revolute_column(self):
        c = single_joint_chain()
        J = robot.jacobian(c, np.zeros(1))
        r = np.array([0.2, 0.0, 0.0])  # ee relative to the joint origin
        assert np.allclose(J[:3, 0], np.cross([0, 0, 1.0], r), atol=1e-15)
        assert np.allclose(J[3:, 0], [0, 0, 1.0], atol=1e-15)

    def test_finite_difference_oracle(self, chain):
        assert jacobian_fd_sweep(chain, n=50, seed=5) < 1e-5

    def test_configuration_only(self, chain, rng):
        q = rng.uniform(-1, 1, 7)
        J1 = robot.jacobian(chain, q)
        J2 = robot.jacobian(chain, q)
        assert np.array_equal(J1, J2)


class TestJacobianDot:
    def test_zero_velocity(self, chain, rng):
        q = rng.uniform(-1, 1, 7)
        assert np.array_equal(robot.jacobian_dot(chain, q, np.zeros(7)),
                              np.zeros((6, 7)))

    def test_finite_difference_oracle(self, chain, rng):
        h = 1e-6
        for _ in range(10):
            q = rng.uniform(-1, 1, 7)
            qd = rng.uniform(-1, 1, 7)
            Jd = robot.jacobian_dot(chain, q, qd)
            J_fd = (robot.jacobian(chain, q + h * qd)
                    - robot.jacobian(chain, q - h * qd)) / (2 * h)
            assert np.max(np.abs(Jd - J_fd)) < 1e-4

    def test_linear_in_qdot(self, chain, rng):
        q = rng.uniform(-1, 1, 7)
        qd = rng.uniform(-1, 1, 7)
        assert np.allclose(robot.jacobian_dot(chain, q, 2 * qd),
                           2 * robot.jacobian_dot(chain, q, qd), atol=1e-12)


class TestDynamicsTerms:
    def test_coriolis_vanishes_at_rest(self, chain, rng):
        q = rng.uniform(-1, 1, 7)
        terms = robot.dynamics_terms(chain, q, np.zeros(7))
        assert np.allclose(terms.C @ np.zeros(7), 0.0)
        assert np.array_equal(terms.C, np.zeros((7, 7)))

    def test_static_gravity_torque_home(self, chain):
        # at q = 0 all COMs sit on the joint-1 axis: every gravity torque is 0
        terms = robot.dynamics_terms(chain, np.zeros(7), np.zeros(7))
        assert np.allclose(terms.G, np.zeros(7), atol=1e-12)

    def test_static_gravity_torque_bent_elbow(self, chain):
        # single bent joint: hand-computed static moment about the y axes.
        # With q4 = pi/2, links 4..7 extend horizontally after joint 4; the
        # moment about joint 4's y axis is sum(m_i * g * x_i) with x_i the
        # horizontal COM offsets 0.185, 0.37, 0.485, 0.6, 0.625 m.
        q = np.zeros(7)
        q[3] = np.pi / 2
        terms = robot.dynamics_terms(chain, q, np.zeros(7))
        ms = [2.5, 2.0, 1.5, 1.0]
        xs = [0.185, 0.37, 0.485, 0.625]
        # rotating joint 4 positively about +y lowers the outstretched links,
        # so the potential gradient (and holding torque) is negative
        expected = -9.81 * sum(m * x for m, x in zip(ms, xs))
        assert abs(terms.G[3] - expected) < 1e-10

    def test_energy_rate_identity(self, chain):
        # d/dt(0.5 qd' M qd) = qd' (tau - G): the Coriolis term does no work
        # (scalar consequence of Mdot - 2C skew-symmetry).  Central difference
        # of KE across one forward and one backward plant step.
        rng = np.random.default_rng(3)
        fric = FrictionParams.zero(7)
        far = np.array([0.0, 0.0, -1e6])
        nz = np.array([0.0, 0.0, 1.0])
        dt = 1e-5
        for _ in range(5):
            q = rng.uniform(-1, 1, 7)
            qd = rng.uniform(-0.5, 0.5, 7)
            tau = rng.uniform(-1, 1, 7)
            terms = robot.dynamics_terms(chain, q, qd)
            power = float(qd @ (tau - terms.G))
            states = {}
            for sgn in (+1.0, -1.0):
                q2, qd2, ok = kernels.rk4_plant_step(
                    *chain.packed(), fric.Fc, fric.Fs, fric.Fv, fric.vs, 0,
                    kernels.PLANE, far, nz, 0.0, 0.0, 1.0, 0.0, 0, 0.05, 0.08,
                    q, qd, tau, sgn * dt, robot.CHRISTOFFEL_H)
                assert ok
                states[sgn] = robot.kinetic_energy(chain, JointState(q2, qd2))
            ke_rate = (states[1.0] - states[-1.0]) / (2 * dt)
            assert abs(ke_rate - power) / max(1.0, abs(power)) < 1e-6


class TestJointFriction:
    def test_zero_at_rest(self):
        assert np.array_equal(robot.joint_friction(TABLE_FRICTION, np.zeros(7)),
                              np.zeros(7))

    def test_joint1_at_unit_speed(self):
        # Fc (1 - e^-100) + Fs e^-100 + Fv * 1 with the first table row
        tf = robot.joint_friction(TABLE_FRICTION, np.array([1.0, 0, 0, 0, 0, 0, 0]))
        expected = 0.07 * (1 - np.exp(-100)) + 0.14 * np.exp(-100) + 0.13
        assert abs(tf[0] - expected) < 1e-15
        assert abs(tf[0] - 0.20) < 1e-3

    def test_odd_symmetry(self, rng):
        qd = rng.uniform(-2, 2, 7)
        assert np.allclose(robot.joint_friction(TABLE_FRICTION, -qd),
                           -robot.joint_friction(TABLE_FRICTION, qd), atol=1e-15)


class TestForwardDynamics:
    def test_gravity_compensation(self, chain, rng):
        q = rng.uniform(-1, 1, 7)
        G = robot.dynamics_terms(chain, q, np.zeros(7)).G
        qdd = robot.forward_dynamics(chain, None, JointState(q, np.zeros(7)), G)
        assert np.max(np.abs(qdd)) < 1e-10

    def test_zero_everything_zero_gravity(self, rng):
        base = default_chain()
        c = KinematicChain(axes=base.axes, offsets=base.offsets, masses=base.masses,
                           coms=base.coms, inertias=base.inertias,
                           ee_offset=base.ee_offset, gravity=np.zeros(3),
                           joint_limits=base.joint_limits)
        q = rng.uniform(-1, 1, 7)
        qdd = robot.forward_dynamics(c, None, JointState(q, np.zeros(7)), np.zeros(7))
        assert np.max(np.abs(qdd)) < 1e-12

    def test_residual_oracle(self, chain, rng):
        for _ in range(10):
            q = rng.uniform(-1, 1, 7)
            qd = rng.uniform(-1, 1, 7)
            tau = rng.uniform(-5, 5, 7)
            wrench = rng.uniform(-3, 3, 6)
            qdd = robot.forward_dynamics(chain, TABLE_FRICTION,
                                         JointState(q, qd), tau, wrench)
            terms = robot.dynamics_terms(chain, q, qd)
            R, _ = robot.forward_kinematics(chain, q)
            J = robot.jacobian(chain, q)
            from phri.spatial import block_rotation
            resid = (terms.M @ qdd + terms.C @ qd + terms.G
                     + robot.joint_friction(TABLE_FRICTION, qd)
                     - tau - J.T @ (block_rotation(R) @ wrench))
            assert np.max(np.abs(resid)) < 1e-9

    def test_ill_conditioned_raises(self):
        c = single_joint_chain()
        bad = KinematicChain(axes=c.axes, offsets=c.offsets, masses=np.array([1e-12]),
                             coms=np.zeros((1, 3)), inertias=np.diag([1e-13, 1e-13, 1e-13])[None] + 0,
                             ee_offset=c.ee_offset, gravity=c.gravity,
                             joint_limits=c.joint_limits)
        big = default_chain()
        # splice the knuckle-sized link onto a heavy chain by hand
        mixed = KinematicChain(
            axes=big.axes, offsets=big.offsets,
            masses=np.concatenate([big.masses[:6], [1e-9]]),
            coms=big.coms,
            inertias=np.concatenate([big.inertias[:6], [np.diag([1e-12, 1e-12, 1e-12])]]),
            ee_offset=big.ee_offset, gravity=big.gravity, joint_limits=big.joint_limits)
        with pytest.raises(IllConditionedInertia):
            robot.forward_dynamics(mixed, None, JointState(np.zeros(7), np.zeros(7)),
                                   np.zeros(7))


class TestInvariants:
    def test_skew_symmetry_sweep(self, chain):
        assert skew_symmetry_sweep(chain, n=100, seed=1) < 1e-8

    def test_mass_positive_definite(self, chain):
        assert inertia_pd_sweep(chain, n=100, seed=2) > 0.0

    def test_energy_conservation_free_fall(self, chain):
        assert energy_audit(chain) < 1e-6

    def test_passive_unforced_energy_with_friction(self, chain):
        q = 0.3 * np.ones(7)
        qd = np.zeros(7)
        fric = TABLE_FRICTION
        far = np.array([0.0, 0.0, -1e6])
        nz = np.array([0.0, 0.0, 1.0])
        e_prev = robot.kinetic_energy(chain, JointState(q, qd)) + robot.potential_energy(chain, q)
        tau = np.zeros(7)
        for _ in range(500):
            q, qd, ok = kernels.rk4_plant_step(
                *chain.packed(), fric.Fc, fric.Fs, fric.Fv, fric.vs, 1,
                kernels.PLANE, far, nz, 0.0, 0.0, 1.0, 0.0, 0, 0.05, 0.08,
                q, qd, tau, 1e-3, robot.CHRISTOFFEL_H)
            assert ok
            e = robot.kinetic_energy(chain, JointState(q, qd)) + robot.potential_energy(chain, q)
            assert e <= e_prev + 1e-9
            e_prev = e

    def test_calibrated_bound_covers_sweep(self, chain):
        from phri.scenarios import DEFAULT_Q0

        bD0, bD1, bD2, worst = robot.calibrate_uncertainty_bound(
            chain, TABLE_FRICTION, 0.97, 1.2, (4, 5, 6), n_samples=150,
            seed=4, center=DEFAULT_Q0)
        assert worst <= 1.0
        assert min(bD0, bD1, bD2) >= 0.0
