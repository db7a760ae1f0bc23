"""Modified Rodrigues Parameter algebra.

Rotation matrices are passive: ``R(sigma)`` maps components expressed in the
reference frame to components expressed in the body frame.
"""
import math
from typing import NamedTuple

import numpy as np

from sdre_attitude.exceptions import GimbalLockException, MrpSingularityException

Vector3 = np.ndarray
Matrix3 = np.ndarray
Mrp = np.ndarray

QUATERNION_NORM_TOLERANCE = 1e-12
SINGULARITY_TOLERANCE = 1e-9
GIMBAL_TOLERANCE = 1e-6


class EulerAngles(NamedTuple):
    roll: float
    pitch: float
    yaw: float

    @classmethod
    def from_degrees(cls, roll: float, pitch: float, yaw: float) -> "EulerAngles":
        return cls(math.radians(roll), math.radians(pitch), math.radians(yaw))

    def to_degrees(self) -> tuple:
        return tuple(math.degrees(a) for a in self)


class UnitQuaternion:
    """Scalar-first quaternion, normalised on construction."""

    def __init__(self, w: float, v) -> None:
        v = np.asarray(v, dtype=float)
        assert v.shape == (3,), f"Quaternion vector part has shape {v.shape}"
        norm = math.sqrt(w * w + float(v @ v))
        assert norm > 0.0 and math.isfinite(norm), "Quaternion must be non-zero"

        self.w = w / norm
        self.v = v / norm

        assert (
            abs(self.w * self.w + float(self.v @ self.v) - 1.0)
            <= QUATERNION_NORM_TOLERANCE
        ), f"Quaternion {self} failed normalisation"

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0, np.zeros(3))

    @classmethod
    def about_axis(cls, axis, angle: float) -> "UnitQuaternion":
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        return cls(math.cos(angle / 2), math.sin(angle / 2) * axis)

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.w], self.v))

    def __repr__(self):
        return f"UnitQuaternion(w={self.w}, v={self.v.tolist()})"


def skew(v: Vector3) -> Matrix3:
    v1, v2, v3 = v
    return np.array(
        [
            [0.0, -v3, v2],
            [v3, 0.0, -v1],
            [-v2, v1, 0.0],
        ]
    )


def kinematics_matrix(sigma: Mrp) -> Matrix3:
    sigma = np.asarray(sigma, dtype=float)
    s2 = float(sigma @ sigma)
    return 0.25 * (
        (1.0 - s2) * np.eye(3) + 2.0 * skew(sigma) + 2.0 * np.outer(sigma, sigma)
    )


def rotation_from_mrp(sigma: Mrp) -> Matrix3:
    sigma = np.asarray(sigma, dtype=float)
    s2 = float(sigma @ sigma)
    denominator = (1.0 + s2) ** 2
    s = skew(sigma)
    return (
        np.eye(3)
        - (4.0 * (1.0 - s2) / denominator) * s
        + (8.0 / denominator) * (s @ s)
    )


def rotation_from_quaternion(q: UnitQuaternion) -> Matrix3:
    v = q.v
    return (
        (q.w * q.w - float(v @ v)) * np.eye(3)
        + 2.0 * np.outer(v, v)
        - 2.0 * q.w * skew(v)
    )


def quaternion_multiply(p: UnitQuaternion, q: UnitQuaternion) -> UnitQuaternion:
    w = p.w * q.w - float(p.v @ q.v)
    v = p.w * q.v + q.w * p.v + np.cross(p.v, q.v)
    return UnitQuaternion(w, v)


def mrp_from_quaternion(q: UnitQuaternion) -> Mrp:
    if q.w + 1.0 < SINGULARITY_TOLERANCE:
        raise MrpSingularityException(
            f"Quaternion {q} is a 360 degree rotation, MRP is singular"
        )
    return q.v / (1.0 + q.w)


def quaternion_from_mrp(sigma: Mrp) -> UnitQuaternion:
    sigma = np.asarray(sigma, dtype=float)
    s2 = float(sigma @ sigma)
    return UnitQuaternion((1.0 - s2) / (1.0 + s2), 2.0 * sigma / (1.0 + s2))


def mrp_from_euler(e: EulerAngles) -> Mrp:
    # 3-2-1 sequence: yaw about z, then pitch about y, then roll about x
    q = quaternion_multiply(
        quaternion_multiply(
            UnitQuaternion.about_axis([0, 0, 1], e.yaw),
            UnitQuaternion.about_axis([0, 1, 0], e.pitch),
        ),
        UnitQuaternion.about_axis([1, 0, 0], e.roll),
    )
    return mrp_from_quaternion(q)


def euler_from_mrp(sigma: Mrp) -> EulerAngles:
    q = quaternion_from_mrp(sigma)
    w = q.w
    x, y, z = q.v

    sin_pitch = min(1.0, max(-1.0, 2.0 * (w * y - z * x)))
    pitch = math.asin(sin_pitch)
    if math.pi / 2 - abs(pitch) < GIMBAL_TOLERANCE:
        raise GimbalLockException(
            f"Pitch {math.degrees(pitch)} deg is too close to +-90 deg for {sigma}"
        )

    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return EulerAngles(roll, pitch, yaw)
