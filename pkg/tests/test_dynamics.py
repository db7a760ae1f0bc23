import unittest
from unittest import TestCase

import numpy as np
from numpy.testing import assert_allclose

from sdre_attitude.attitude import (
    UnitQuaternion,
    kinematics_matrix,
    mrp_from_quaternion,
    quaternion_from_mrp,
    quaternion_multiply,
    skew,
)
from sdre_attitude.control import feedforward_torque
from sdre_attitude.dynamics import (
    REFERENCE_INERTIA,
    InertiaMatrix,
    angular_momentum,
    body_rate_derivative,
    body_rate_from_error_rate,
    error_rate_from_body_rate,
    error_state_derivative,
    kinetic_energy,
    sdc_factorize,
    stack_state,
    virtual_input,
)


def reduced_field(x, u, J):
    sigma, omega = x[:3], x[3:]
    return np.concatenate(
        (
            kinematics_matrix(sigma) @ omega,
            J.inverse @ (u - skew(omega) @ J.matrix @ omega),
        )
    )


def random_inertia(rng):
    entries = np.array(REFERENCE_INERTIA.entries()) * rng.uniform(0.8, 1.2, size=6)
    return InertiaMatrix.from_entries(*entries)


class TestInertiaMatrix(TestCase):
    def test_reference_entries(self):
        self.assertEqual(
            REFERENCE_INERTIA.entries(),
            (9.8194, 9.7030, 9.7309, -0.0721, -0.2893, -0.1011),
        )
        assert_allclose(REFERENCE_INERTIA.matrix, REFERENCE_INERTIA.matrix.T)
        assert_allclose(
            REFERENCE_INERTIA.matrix @ REFERENCE_INERTIA.inverse, np.eye(3), atol=1e-14
        )

    def test_read_only(self):
        with self.assertRaises(ValueError):
            REFERENCE_INERTIA.matrix[0, 0] = 1.0

    def test_rejects_asymmetric(self):
        with self.assertRaises(AssertionError):
            InertiaMatrix([[1, 0.1, 0], [0, 1, 0], [0, 0, 1]])

    def test_rejects_indefinite(self):
        with self.assertRaises(AssertionError):
            InertiaMatrix.from_entries(1.0, 1.0, 1.0, 2.0, 0.0, 0.0)

    def test_rejects_wrong_shape(self):
        with self.assertRaises(AssertionError):
            InertiaMatrix(np.eye(2))

    def test_equality(self):
        self.assertEqual(
            InertiaMatrix.from_entries(*REFERENCE_INERTIA.entries()), REFERENCE_INERTIA
        )
        self.assertNotEqual(InertiaMatrix(np.eye(3)), REFERENCE_INERTIA)


class TestRates(TestCase):
    def test_error_rate_round_trip(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            sigma = rng.uniform(-0.5, 0.5, 3)
            omega_ib = rng.normal(size=3)
            omega_io = rng.normal(size=3) * 1e-3
            omega_e = error_rate_from_body_rate(omega_ib, sigma, omega_io)
            assert_allclose(
                body_rate_from_error_rate(omega_e, sigma, omega_io),
                omega_ib,
                atol=1e-15,
            )

    def test_body_rate_derivative(self):
        J = InertiaMatrix(np.diag([1.0, 2.0, 3.0]))
        omega = np.array([0.1, 0.2, 0.3])
        # Euler equations for a principal-axis body
        expected = np.array(
            [
                (2.0 - 3.0) * 0.2 * 0.3 / 1.0,
                (3.0 - 1.0) * 0.3 * 0.1 / 2.0,
                (1.0 - 2.0) * 0.1 * 0.2 / 3.0,
            ]
        )
        assert_allclose(body_rate_derivative(omega, np.zeros(3), J), expected)

    def test_energy_and_momentum(self):
        omega = np.array([0.01, -0.02, 0.03])
        self.assertAlmostEqual(
            kinetic_energy(omega, REFERENCE_INERTIA),
            0.5 * omega @ REFERENCE_INERTIA.matrix @ omega,
        )
        assert_allclose(
            angular_momentum(omega, REFERENCE_INERTIA), REFERENCE_INERTIA.matrix @ omega
        )


class TestErrorDynamics(TestCase):
    def test_torque_free_without_orbit_rate(self):
        rng = np.random.default_rng(12)
        J = random_inertia(rng)
        x = np.concatenate((rng.uniform(-0.5, 0.5, 3), rng.normal(size=3) * 0.1))
        tau = rng.normal(size=3) * 0.01
        assert_allclose(
            error_state_derivative(x, tau, np.zeros(3), J),
            reduced_field(x, tau, J),
            atol=1e-15,
        )

    def test_steady_orbit_tracking(self):
        # aligned with the orbit frame and rotating with it: nothing changes
        J = InertiaMatrix(5.0 * np.eye(3))
        omega_io = np.array([0.0, -0.001, 0.0])
        derivative = error_state_derivative(np.zeros(6), np.zeros(3), omega_io, J)
        assert_allclose(derivative, np.zeros(6), atol=1e-18)

    def test_mrp_rate_matches_quaternion(self):
        rng = np.random.default_rng(13)
        h = 1e-6
        for _ in range(20):
            sigma = rng.uniform(-0.6, 0.6, 3)
            omega = rng.normal(size=3) * 0.2
            q = quaternion_from_mrp(sigma)
            speed = np.linalg.norm(omega)
            step = UnitQuaternion.about_axis(omega, speed * h)
            back = UnitQuaternion.about_axis(omega, -speed * h)
            forward = quaternion_multiply(q, step)
            backward = quaternion_multiply(q, back)
            derivative = (
                mrp_from_quaternion(forward) - mrp_from_quaternion(backward)
            ) / (2 * h)

            x = stack_state(sigma, omega)
            zero = np.zeros(3)
            field = error_state_derivative(x, zero, zero, REFERENCE_INERTIA)
            assert_allclose(field[:3], derivative, atol=1e-8)

    def test_feedforward_cancels_orbit_coupling(self):
        rng = np.random.default_rng(14)
        for _ in range(1000):
            J = random_inertia(rng)
            x = np.concatenate((rng.uniform(-1, 1, 3), rng.uniform(-0.1, 0.1, 3)))
            omega_io = rng.uniform(-0.01, 0.01, 3)
            u = rng.uniform(-0.05, 0.05, 3)

            tau = feedforward_torque(x, omega_io, J) + u
            assert_allclose(
                error_state_derivative(x, tau, omega_io, J),
                reduced_field(x, u, J),
                rtol=0,
                atol=1e-11,
            )
            assert_allclose(virtual_input(x, tau, omega_io, J), u, rtol=0, atol=1e-13)


class TestSdcFactorization(TestCase):
    def test_reproduces_reduced_field(self):
        rng = np.random.default_rng(15)
        for _ in range(100):
            J = random_inertia(rng)
            x = np.concatenate((rng.uniform(-1, 1, 3), rng.uniform(-0.1, 0.1, 3)))
            u = rng.uniform(-0.05, 0.05, 3)
            sdc = sdc_factorize(x, J)
            assert_allclose(sdc.a @ x + sdc.b @ u, reduced_field(x, u, J), atol=1e-15)

    def test_structure(self):
        sdc = sdc_factorize(np.zeros(6), REFERENCE_INERTIA)
        self.assertEqual(sdc.a.shape, (6, 6))
        self.assertEqual(sdc.b.shape, (6, 3))
        assert_allclose(sdc.a[:3, 3:], 0.25 * np.eye(3))
        assert_allclose(sdc.a[:3, :3], np.zeros((3, 3)))
        assert_allclose(sdc.a[3:, :], np.zeros((3, 6)))
        assert_allclose(sdc.b[3:, :], REFERENCE_INERTIA.inverse)
        assert_allclose(sdc.b[:3, :], np.zeros((3, 3)))


if __name__ == "__main__":
    unittest.main()
