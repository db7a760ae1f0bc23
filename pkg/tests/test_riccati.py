import math
import unittest
from unittest import TestCase
from unittest.mock import patch

import numpy as np
from numpy.testing import assert_allclose
from scipy.linalg import solve_continuous_are, solve_continuous_lyapunov

from sdre_attitude.config import WeightCase
from sdre_attitude.dynamics import REFERENCE_INERTIA, sdc_factorize
from sdre_attitude.exceptions import (
    AsymmetricMatrixException,
    RiccatiException,
    SingularLyapunovException,
)
from sdre_attitude.gaintable import BreakpointGrid
from sdre_attitude.riccati import (
    WeightPair,
    gain_from_solution,
    is_hurwitz,
    is_positive_definite,
    riccati_residual,
    solve_care,
    solve_lyapunov,
)

NOMINAL = WeightPair.diagonal(0.1, 1e-6, 1000)


class TestWeightPair(TestCase):
    def test_diagonal(self):
        w = WeightPair.diagonal(0.1, 1e-6, 1000)
        assert_allclose(np.diag(w.q), [0.1] * 3 + [1e-6] * 3)
        assert_allclose(w.r, 1000 * np.eye(3))
        self.assertEqual(w.coefficients, (0.1, 1e-6, 1000))
        self.assertEqual(repr(w), "WeightPair(q1=0.1, q2=1e-06, r=1000)")

    def test_rejects_non_positive(self):
        with self.assertRaises(AssertionError):
            WeightPair.diagonal(0.0, 1e-6, 1000)
        with self.assertRaises(AssertionError):
            WeightPair.diagonal(0.1, 1e-6, -1)


class TestLyapunov(TestCase):
    def test_matches_scipy(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            a = rng.normal(size=(4, 4)) - 3 * np.eye(4)
            q = rng.normal(size=(4, 4))
            q = q @ q.T
            x = solve_lyapunov(a, q)
            expected = solve_continuous_lyapunov(a.T, -q)
            assert_allclose(x, expected, rtol=1e-9, atol=1e-12)
            assert_allclose(x, x.T, atol=0)

    def test_singular(self):
        with self.assertRaises(SingularLyapunovException):
            solve_lyapunov(np.zeros((2, 2)), np.eye(2))
        with self.assertRaises(SingularLyapunovException):
            # eigenvalues +1 and -1 sum to zero
            solve_lyapunov(np.diag([1.0, -1.0]), np.eye(2))

    def test_scalar(self):
        assert_allclose(solve_lyapunov([[-2.0]], [[3.0]]), [[0.75]])


class TestDefiniteness(TestCase):
    def test_positive_definite(self):
        self.assertTrue(is_positive_definite(np.eye(3)))
        self.assertFalse(is_positive_definite(np.diag([1.0, 0.0, 1.0])))
        self.assertFalse(is_positive_definite(np.diag([1.0, np.nan, 1.0])))

    def test_asymmetric(self):
        with self.assertRaises(AsymmetricMatrixException):
            is_positive_definite([[1.0, 0.5], [0.0, 1.0]])

    def test_hurwitz(self):
        self.assertTrue(is_hurwitz(-np.eye(3)))
        self.assertTrue(is_hurwitz([[0.0, 1.0], [-2.0, -3.0]]))
        self.assertFalse(is_hurwitz([[1.0]]))
        self.assertFalse(is_hurwitz(np.zeros((2, 2))))
        self.assertFalse(is_hurwitz([[0.0, 1.0], [-1.0, 0.0]]))


class TestScalarCare(TestCase):
    def test_closed_form(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            a = rng.uniform(-2, 2)
            b = rng.uniform(0.1, 2)
            q = rng.uniform(0.01, 10)
            r = rng.uniform(0.01, 10)
            root = math.sqrt(a * a + b * b * q / r)
            # cancellation-free form of r (a + root) / b^2
            expected = q / (root - a) if a < 0 else r * (a + root) / (b * b)

            solution = solve_care([[a]], [[b]], WeightPair([[q]], [[r]]))
            self.assertLessEqual(
                abs(solution.p[0, 0] - expected), 1e-10 * expected, (a, b, q, r)
            )


class TestCare(TestCase):
    def test_non_stabilizable(self):
        # the second mode is unstable and not reachable from the input
        with self.assertRaises(RiccatiException):
            solve_care(np.eye(2), [[1.0], [0.0]], WeightPair(np.eye(2), [[1.0]]))

    def test_nominal_weights_at_origin(self):
        sdc = sdc_factorize(np.zeros(6), REFERENCE_INERTIA)
        solution = solve_care(sdc.a, sdc.b, NOMINAL)
        expected = solve_continuous_are(sdc.a, sdc.b, NOMINAL.q, NOMINAL.r)

        self.assertLessEqual(
            np.linalg.norm(solution.p - expected), 1e-6 * np.linalg.norm(expected)
        )
        self.assertLessEqual(solution.residual_norm, 1e-8 * np.linalg.norm(NOMINAL.q))
        self.assertAlmostEqual(
            solution.residual_norm,
            riccati_residual(sdc.a, sdc.b, NOMINAL, solution.p),
        )
        assert_allclose(solution.p, solution.p.T, atol=0)

        gain = gain_from_solution(solution, sdc.b, NOMINAL.r)
        self.assertEqual(gain.shape, (3, 6))
        self.assertTrue(is_hurwitz(sdc.a - sdc.b @ gain))

    def test_off_origin_vertices(self):
        rng = np.random.default_rng(22)
        for _ in range(10):
            x = np.concatenate(
                (rng.uniform(-1, 1, 3), np.radians(rng.uniform(-5, 5, 3)))
            )
            sdc = sdc_factorize(x, REFERENCE_INERTIA)
            for w in (NOMINAL, WeightPair.diagonal(0.1, 1e-6, 1)):
                solution = solve_care(sdc.a, sdc.b, w)
                self.assertLessEqual(solution.residual_norm, 1e-8 * np.linalg.norm(w.q))
                self.assertTrue(is_positive_definite(solution.p))

                expected = solve_continuous_are(sdc.a, sdc.b, w.q, w.r)
                self.assertLessEqual(
                    np.linalg.norm(solution.p - expected),
                    1e-6 * np.linalg.norm(expected),
                )

    def test_tighter_tolerance(self):
        x = np.array([0.3, -0.2, 0.1, 0.01, 0.0, -0.02])
        sdc = sdc_factorize(x, REFERENCE_INERTIA)
        solution = solve_care(sdc.a, sdc.b, NOMINAL, tol=1e-10)
        self.assertLessEqual(solution.residual_norm, 1e-10 * np.linalg.norm(NOMINAL.q))
        self.assertLess(solution.iterations, 20)

    def test_default_grid_vertices(self):
        grid = BreakpointGrid.default()
        for case, index in (
            (WeightCase.CASE_2, (0, 0, 1, 0, 1, 2)),
            (WeightCase.CASE_3, (0, 0, 0, 0, 0, 0)),
            (WeightCase.CASE_2, (2, 2, 2, 2, 2, 2)),
            (WeightCase.CASE_4, (0, 2, 0, 2, 0, 2)),
        ):
            w = case.weights
            sdc = sdc_factorize(grid.vertex(index), REFERENCE_INERTIA)
            solution = solve_care(sdc.a, sdc.b, w)

            self.assertLessEqual(solution.residual_norm, 1e-8 * np.linalg.norm(w.q))
            expected = solve_continuous_are(sdc.a, sdc.b, w.q, w.r)
            self.assertLessEqual(
                np.linalg.norm(solution.p - expected),
                1e-6 * np.linalg.norm(expected),
            )
            gain = gain_from_solution(solution, sdc.b, w.r)
            self.assertTrue(is_hurwitz(sdc.a - sdc.b @ gain))

    def test_flow_start_without_hamiltonian(self):
        x = np.array([-1.0, -1.0, 0.0, -math.radians(5), 0.0, math.radians(5)])
        sdc = sdc_factorize(x, REFERENCE_INERTIA)
        expected = solve_continuous_are(sdc.a, sdc.b, NOMINAL.q, NOMINAL.r)
        with patch("sdre_attitude.riccati._hamiltonian_start", return_value=None):
            solution = solve_care(sdc.a, sdc.b, NOMINAL)
        self.assertLessEqual(
            np.linalg.norm(solution.p - expected), 1e-6 * np.linalg.norm(expected)
        )


if __name__ == "__main__":
    unittest.main()
