import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phri.errors import NearSingular, NonUnitAxis, ZeroQuaternion
from phri.spatial import (IDENTITY_QUAT, block_rotation, pseudoinverse,
                          quat_error, quat_from_axis_angle, quat_mul,
                          quat_normalize, quat_scale_angle, quat_to_rotation,
                          rotation_to_quat, skew)


def random_unit_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


class TestSkew:
    def test_zero(self):
        assert np.array_equal(skew(np.zeros(3)), np.zeros((3, 3)))

    def test_basis_z(self):
        expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0.0]])
        assert np.array_equal(skew(np.array([0.0, 0.0, 1.0])), expected)

    def test_cross_product_oracle(self, rng):
        for _ in range(50):
            v, w = rng.normal(size=3), rng.normal(size=3)
            assert np.allclose(skew(v) @ w, np.cross(v, w), atol=1e-12)

    def test_antisymmetric(self, rng):
        S = skew(rng.normal(size=3))
        assert np.array_equal(S.T, -S)


class TestQuatToRotation:
    def test_identity(self):
        assert np.allclose(quat_to_rotation(IDENTITY_QUAT), np.eye(3), atol=1e-15)

    def test_quarter_turn_z(self):
        q = np.array([np.cos(np.pi / 4), 0.0, 0.0, np.sin(np.pi / 4)])
        expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]])
        assert np.allclose(quat_to_rotation(q), expected, atol=1e-15)

    def test_orthogonality(self, rng):
        for _ in range(50):
            R = quat_to_rotation(random_unit_quat(rng))
            assert np.allclose(R.T @ R, np.eye(3), atol=1e-9)
            assert abs(np.linalg.det(R) - 1.0) < 1e-9

    def test_zero_quaternion(self):
        with pytest.raises(ZeroQuaternion):
            quat_to_rotation(np.array([1e-12, 0, 0, 0]))

    def test_round_trip(self, rng):
        for _ in range(50):
            q = random_unit_quat(rng)
            if q[0] < 0:
                q = -q
            R = quat_to_rotation(q)
            assert np.allclose(rotation_to_quat(R), q, atol=1e-9)


class TestQuatFromAxisAngle:
    def test_zero_angle(self):
        q = quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), 0.0)
        assert np.array_equal(q, IDENTITY_QUAT)

    def test_half_turn(self):
        q = quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), np.pi)
        assert np.allclose(q, [0.0, 0.0, 0.0, 1.0], atol=1e-15)

    def test_third_pi_about_x(self):
        q = quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), np.pi / 3)
        assert np.allclose(q, [np.cos(np.pi / 6), np.sin(np.pi / 6), 0.0, 0.0])

    def test_non_unit_axis(self):
        with pytest.raises(NonUnitAxis):
            quat_from_axis_angle(np.array([1.0, 1.0, 0.0]), 0.1)


class TestQuatError:
    def test_identical(self, rng):
        q = random_unit_quat(rng)
        assert np.allclose(quat_error(q, q), IDENTITY_QUAT, atol=1e-12)

    def test_identity_desired(self, rng):
        q = random_unit_quat(rng)
        assert np.allclose(quat_error(IDENTITY_QUAT, q), q, atol=1e-12)

    def test_matrix_composition_oracle(self, rng):
        for _ in range(50):
            qd, q = random_unit_quat(rng), random_unit_quat(rng)
            Re = quat_to_rotation(quat_error(qd, q))
            expected = quat_to_rotation(qd).T @ quat_to_rotation(q)
            assert np.allclose(Re, expected, atol=1e-8)

    @given(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
    @settings(max_examples=100, deadline=None)
    def test_unit_norm_property(self, vals):
        a = np.array(vals[:4])
        b = np.array(vals[4:])
        if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
            return
        e = quat_error(a / np.linalg.norm(a), b / np.linalg.norm(b))
        assert abs(np.linalg.norm(e) - 1.0) < 1e-9


class TestPseudoinverse:
    def test_square_inverse(self, rng):
        J = rng.normal(size=(6, 6)) + 3 * np.eye(6)
        assert np.allclose(pseudoinverse(J), np.linalg.inv(J), atol=1e-8)

    def test_block_identity(self):
        J = np.hstack([np.eye(6), np.zeros((6, 1))])
        Jp = pseudoinverse(J)
        assert np.allclose(Jp, np.vstack([np.eye(6), np.zeros((1, 6))]), atol=1e-12)

    def test_projection_residuals(self, rng):
        for _ in range(20):
            J = rng.normal(size=(6, 7))
            Jp = pseudoinverse(J)
            assert np.allclose(J @ Jp, np.eye(6), atol=1e-8)
            assert np.allclose(J @ Jp @ J, J, atol=1e-8)
            assert np.allclose(Jp @ J @ Jp, Jp, atol=1e-8)

    def test_near_singular(self):
        J = np.zeros((6, 7))
        J[0, 0] = 1.0
        with pytest.raises(NearSingular):
            pseudoinverse(J)


class TestBlockRotation:
    def test_identity(self):
        assert np.array_equal(block_rotation(np.eye(3)), np.eye(6))

    def test_orthogonality(self, rng):
        R = quat_to_rotation(random_unit_quat(rng))
        Rb = block_rotation(R)
        assert np.allclose(Rb.T @ Rb, np.eye(6), atol=1e-12)

    def test_twist_halves(self, rng):
        R = quat_to_rotation(random_unit_quat(rng))
        tw = rng.normal(size=6)
        out = block_rotation(R) @ tw
        assert np.allclose(out[:3], R @ tw[:3], atol=1e-14)
        assert np.allclose(out[3:], R @ tw[3:], atol=1e-14)


def test_quat_scale_angle_halves_rotation():
    q = quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), 0.8)
    h = quat_scale_angle(q, 0.5)
    assert np.allclose(h, quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), 0.4))
    assert np.array_equal(quat_scale_angle(IDENTITY_QUAT, 0.3), IDENTITY_QUAT)


def test_operations_are_pure(rng):
    v = rng.normal(size=3)
    assert np.array_equal(skew(v), skew(v))
    q = random_unit_quat(rng)
    assert np.array_equal(quat_to_rotation(q), quat_to_rotation(q))
    J = rng.normal(size=(6, 7))
    assert np.array_equal(pseudoinverse(J), pseudoinverse(J))


def test_quat_mul_normalize_consistency(rng):
    a, b = random_unit_quat(rng), random_unit_quat(rng)
    Rab = quat_to_rotation(quat_mul(a, b))
    assert np.allclose(Rab, quat_to_rotation(a) @ quat_to_rotation(b), atol=1e-12)
    assert abs(np.linalg.norm(quat_normalize(3.0 * a)) - 1.0) < 1e-15
