from typing import Callable

import numpy as np

from sdre_attitude.exceptions import DivergenceException


def rk4_step(
    state: np.ndarray, field: Callable[[np.ndarray], np.ndarray], dt: float
) -> np.ndarray:
    """Classical fourth order Runge-Kutta step of an autonomous field."""
    assert dt > 0, f"Step size must be positive, got {dt}"

    k1 = field(state)
    k2 = field(state + 0.5 * dt * k1)
    k3 = field(state + 0.5 * dt * k2)
    k4 = field(state + dt * k3)
    result = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    if not np.all(np.isfinite(result)):
        raise DivergenceException("Integration produced a non-finite state")
    return result
