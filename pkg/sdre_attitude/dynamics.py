"""Rigid-body dynamics and orbit-relative error dynamics.

The error state is the stacked 6-vector ``x = [sigma_e; omega_e]``: the MRP of
the body relative to the orbit frame and the body rate relative to the orbit
frame, both in body axes. Rates are rad/s throughout.
"""
from typing import NamedTuple

import numpy as np

from sdre_attitude.attitude import (
    Mrp,
    Vector3,
    kinematics_matrix,
    rotation_from_mrp,
    skew,
)
from sdre_attitude.riccati import is_positive_definite

SYMMETRY_TOLERANCE = 1e-12

ErrorState = np.ndarray
OrbitRate = np.ndarray


class InertiaMatrix:
    """Symmetric positive definite inertia in kg*m^2."""

    def __init__(self, matrix) -> None:
        matrix = np.array(matrix, dtype=float)
        assert matrix.shape == (3, 3), f"Inertia must be 3x3, got {matrix.shape}"
        assert np.all(np.isfinite(matrix)), "Inertia entries must be finite"
        scale = max(1.0, float(np.abs(matrix).max()))
        assert np.all(
            np.abs(matrix - matrix.T) <= SYMMETRY_TOLERANCE * scale
        ), "Inertia must be symmetric"
        assert is_positive_definite(
            matrix
        ), f"Inertia must be positive definite: {matrix.tolist()}"

        matrix.setflags(write=False)
        self.matrix = matrix
        self.inverse = np.linalg.inv(matrix)
        self.inverse.setflags(write=False)

    @classmethod
    def from_entries(cls, jxx, jyy, jzz, jxy, jxz, jyz) -> "InertiaMatrix":
        return cls(
            [
                [jxx, jxy, jxz],
                [jxy, jyy, jyz],
                [jxz, jyz, jzz],
            ]
        )

    def entries(self) -> tuple:
        m = self.matrix
        return (m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[0, 2], m[1, 2])

    def __eq__(self, other):
        if not isinstance(other, InertiaMatrix):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"InertiaMatrix({self.matrix.tolist()})"


# Satellite inertia of the reference scenario
REFERENCE_INERTIA = InertiaMatrix.from_entries(
    9.8194, 9.7030, 9.7309, -0.0721, -0.2893, -0.1011
)


class SdcPair(NamedTuple):
    a: np.ndarray
    b: np.ndarray


def stack_state(sigma_e: Mrp, omega_e: Vector3) -> ErrorState:
    return np.concatenate(
        (np.asarray(sigma_e, dtype=float), np.asarray(omega_e, dtype=float))
    )


def body_rate_derivative(omega_ib: Vector3, tau: Vector3, J: InertiaMatrix) -> Vector3:
    return J.inverse @ (tau - skew(omega_ib) @ (J.matrix @ omega_ib))


def error_rate_from_body_rate(
    omega_ib: Vector3, sigma_e: Mrp, omega_io: OrbitRate
) -> Vector3:
    return omega_ib - rotation_from_mrp(sigma_e) @ omega_io


def body_rate_from_error_rate(
    omega_e: Vector3, sigma_e: Mrp, omega_io: OrbitRate
) -> Vector3:
    return omega_e + rotation_from_mrp(sigma_e) @ omega_io


def error_state_derivative(
    x: ErrorState, tau_a: Vector3, omega_io: OrbitRate, J: InertiaMatrix
) -> np.ndarray:
    sigma_e = x[:3]
    omega_e = x[3:]
    r_omega_io = rotation_from_mrp(sigma_e) @ omega_io
    omega_ib = omega_e + r_omega_io

    sigma_dot = kinematics_matrix(sigma_e) @ omega_e
    # d/dt R(sigma_e) = -S(omega_e) R(sigma_e), omega_io constant in the orbit frame
    omega_e_dot = body_rate_derivative(omega_ib, tau_a, J) + np.cross(
        omega_e, r_omega_io
    )
    return np.concatenate((sigma_dot, omega_e_dot))


def virtual_input(
    x: ErrorState, tau_a: Vector3, omega_io: OrbitRate, J: InertiaMatrix
) -> Vector3:
    """Input u for which the error dynamics read -J^-1 S(w) J w + J^-1 u."""
    omega_e = x[3:]
    r = rotation_from_mrp(x[:3]) @ omega_io
    jm = J.matrix
    return (
        tau_a
        - skew(r) @ (jm @ omega_e)
        - skew(omega_e) @ (jm @ r)
        - skew(r) @ (jm @ r)
        + jm @ (skew(omega_e) @ r)
    )


def sdc_factorize(x: ErrorState, J: InertiaMatrix) -> SdcPair:
    a = np.zeros((6, 6))
    a[:3, 3:] = kinematics_matrix(x[:3])
    a[3:, 3:] = -J.inverse @ skew(x[3:]) @ J.matrix

    b = np.zeros((6, 3))
    b[3:, :] = J.inverse
    return SdcPair(a, b)


def kinetic_energy(omega: Vector3, J: InertiaMatrix) -> float:
    return 0.5 * float(omega @ J.matrix @ omega)


def angular_momentum(omega: Vector3, J: InertiaMatrix) -> Vector3:
    return J.matrix @ omega
