from typing import NamedTuple

import numpy as np

from sdre_attitude.attitude import Vector3, rotation_from_mrp, skew
from sdre_attitude.dynamics import ErrorState, InertiaMatrix, OrbitRate
from sdre_attitude.gaintable import GainTable

# Torque level the actuators of the reference satellite are sized for, N*m.
# Used for verdicts only, the control law is never saturated.
TORQUE_GUIDELINE = 0.02


class ControlCommand(NamedTuple):
    tau_a: Vector3
    feedback_part: Vector3
    feedforward_part: Vector3
    gain_used: np.ndarray
    cell_index: int


def feedforward_torque(x: ErrorState, omega_io: OrbitRate, J: InertiaMatrix) -> Vector3:
    """Torque cancelling the orbit-rate coupling of the error dynamics.

    With it the closed loop reduces to -J^-1 S(w) J w + J^-1 u for the
    feedback part u.
    """
    omega_e = x[3:]
    r = rotation_from_mrp(x[:3]) @ omega_io
    jm = J.matrix
    return (
        skew(r) @ (jm @ omega_e)
        + skew(omega_e) @ (jm @ r)
        + skew(r) @ (jm @ r)
        - jm @ (skew(omega_e) @ r)
    )


def control_torque(
    x: ErrorState, table: GainTable, omega_io: OrbitRate, J: InertiaMatrix
) -> ControlCommand:
    gain, cell_index = table.lookup(x)
    feedback = -gain @ x
    feedforward = feedforward_torque(x, omega_io, J)
    return ControlCommand(
        feedback + feedforward, feedback, feedforward, gain, cell_index
    )
