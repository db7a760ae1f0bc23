"""Deterministic closed-loop simulation of the error dynamics."""
import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from sdre_attitude.control import control_torque
from sdre_attitude.dynamics import InertiaMatrix, error_state_derivative, stack_state
from sdre_attitude.exceptions import DivergenceException
from sdre_attitude.gaintable import GainTable
from sdre_attitude.integrator import rk4_step

logger = logging.getLogger("sdre_attitude").getChild(__name__)

DEFAULT_DT = 0.05
DEFAULT_DURATION = 600.0


def _vector3(value) -> np.ndarray:
    vector = np.array(value, dtype=float).reshape(-1)
    assert vector.shape == (3,), f"Expected 3 components, got {vector.shape}"
    assert np.all(np.isfinite(vector)), f"Non-finite vector {vector.tolist()}"
    vector.setflags(write=False)
    return vector


@dataclass(frozen=True, eq=False)
class Scenario:
    initial_sigma: np.ndarray
    initial_omega_e: np.ndarray
    omega_io: np.ndarray
    plant_inertia: InertiaMatrix
    controller_inertia: InertiaMatrix
    table: Optional[GainTable]
    dt: float = DEFAULT_DT
    duration: float = DEFAULT_DURATION

    def __post_init__(self):
        object.__setattr__(self, "initial_sigma", _vector3(self.initial_sigma))
        object.__setattr__(self, "initial_omega_e", _vector3(self.initial_omega_e))
        object.__setattr__(self, "omega_io", _vector3(self.omega_io))
        assert self.dt > 0, f"Step size must be positive, got {self.dt}"
        assert self.duration >= self.dt, "Duration must cover at least one step"
        assert isinstance(self.plant_inertia, InertiaMatrix)
        assert isinstance(self.controller_inertia, InertiaMatrix)

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    def with_plant_inertia(self, inertia: InertiaMatrix) -> "Scenario":
        return replace(self, plant_inertia=inertia)


@dataclass(frozen=True, eq=False)
class Trajectory:
    time: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray
    tau: np.ndarray
    cell_index: np.ndarray

    def __len__(self):
        return self.time.size


def _integrate(s: Scenario, torque: Callable[[np.ndarray], tuple]) -> Trajectory:
    n = s.steps
    time = np.arange(n + 1) * s.dt
    states = np.zeros((n + 1, 6))
    torques = np.zeros((n + 1, 3))
    cells = np.zeros(n + 1, dtype=int)

    x = stack_state(s.initial_sigma, s.initial_omega_e)
    for k in range(n + 1):
        tau, cell = torque(x)
        if not np.all(np.isfinite(tau)):
            raise DivergenceException(
                f"Non-finite torque at t={time[k]:.6g} s", float(time[k])
            )
        states[k] = x
        torques[k] = tau
        cells[k] = cell
        if k == n:
            break

        def field(state):
            return error_state_derivative(
                state, torque(state)[0], s.omega_io, s.plant_inertia
            )

        try:
            x = rk4_step(x, field, s.dt)
        except DivergenceException as e:
            raise DivergenceException(
                f"Closed loop diverged at t={time[k + 1]:.6g} s", float(time[k + 1])
            ) from e

    return Trajectory(time, states[:, :3], states[:, 3:], torques, cells)


def run_closed_loop(s: Scenario) -> Trajectory:
    assert s.table is not None, "Closed loop needs a gain table"

    def torque(x):
        command = control_torque(x, s.table, s.omega_io, s.controller_inertia)
        return command.tau_a, command.cell_index

    logger.debug(f"Running {s.steps} steps of {s.dt} s")
    return _integrate(s, torque)


def run_open_loop(s: Scenario) -> Trajectory:
    """Same integration with the actuator torque forced to zero."""
    zero = np.zeros(3)
    return _integrate(s, lambda x: (zero, -1))
