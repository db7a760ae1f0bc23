from dataclasses import dataclass
from typing import Optional

import numpy as np

from sdre_attitude.control import TORQUE_GUIDELINE
from sdre_attitude.sim import Trajectory

DEFAULT_SETTLE_THRESHOLD = 0.01


@dataclass(frozen=True, eq=False)
class Metrics:
    peak_torque_per_axis: np.ndarray
    peak_torque_inf: float
    # None when the attitude error never stays below the threshold
    settling_time: Optional[float]
    final_attitude_error: float

    @property
    def settled(self) -> bool:
        return self.settling_time is not None

    def exceeds_guideline(self, guideline: float = TORQUE_GUIDELINE) -> bool:
        return self.peak_torque_inf >= guideline

    def __eq__(self, other):
        if not isinstance(other, Metrics):
            return NotImplemented
        return (
            np.array_equal(self.peak_torque_per_axis, other.peak_torque_per_axis)
            and self.peak_torque_inf == other.peak_torque_inf
            and self.settling_time == other.settling_time
            and self.final_attitude_error == other.final_attitude_error
        )


def compute_metrics(
    traj: Trajectory, settle_threshold: float = DEFAULT_SETTLE_THRESHOLD
) -> Metrics:
    assert len(traj) > 0, "Trajectory is empty"

    peak = np.max(np.abs(traj.tau), axis=0)
    error = np.max(np.abs(traj.sigma), axis=1)

    outside = np.flatnonzero(error >= settle_threshold)
    if outside.size == 0:
        settling_time = float(traj.time[0])
    elif outside[-1] == len(traj) - 1:
        settling_time = None
    else:
        settling_time = float(traj.time[outside[-1] + 1])

    return Metrics(peak, float(peak.max()), settling_time, float(error[-1]))
