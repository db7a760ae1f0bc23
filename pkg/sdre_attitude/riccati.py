"""Small dense solvers for the pointwise SDRE design.

Everything here works on plain numpy arrays of modest size. The algebraic
Riccati equation is solved by Newton-Kleinman iteration, started from the
stable invariant subspace of the Hamiltonian matrix, or from the Riccati
flow when that subspace is unusable.
"""
import logging
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np

from sdre_attitude.exceptions import (
    AsymmetricMatrixException,
    CertificationException,
    DivergenceException,
    RiccatiNoConvergenceException,
    SingularLyapunovException,
)
from sdre_attitude.integrator import rk4_step

logger = logging.getLogger("sdre_attitude").getChild(__name__)

DEFAULT_TOLERANCE = 1e-8
MAX_ITERATIONS = 200
MAX_FLOW_STEPS = 100_000
CONDITION_LIMIT = 1e12
SYMMETRY_TOLERANCE = 1e-9
IMAGINARY_TOLERANCE = 1e-8
FLOW_RESIDUAL_FRACTION = 1e-3


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def _as_matrix(m) -> np.ndarray:
    return np.atleast_2d(np.asarray(m, dtype=float))


class WeightPair:
    """Quadratic state and input weights of the LQR cost."""

    q: np.ndarray
    r: np.ndarray
    coefficients: Optional[Tuple[float, float, float]]

    def __init__(self, q, r, coefficients=None) -> None:
        q = _as_matrix(q)
        r = _as_matrix(r)
        assert q.shape[0] == q.shape[1], f"State weight must be square, got {q.shape}"
        assert r.shape[0] == r.shape[1], f"Input weight must be square, got {r.shape}"
        assert is_positive_definite(q), "State weight must be positive definite"
        assert is_positive_definite(r), "Input weight must be positive definite"

        self.q = q
        self.r = r
        self.coefficients = coefficients

    @classmethod
    def diagonal(cls, q1: float, q2: float, r: float) -> "WeightPair":
        q = np.diag([q1] * 3 + [q2] * 3)
        return cls(q, r * np.eye(3), coefficients=(q1, q2, r))

    def __repr__(self):
        if self.coefficients is not None:
            q1, q2, r = self.coefficients
            return f"WeightPair(q1={q1}, q2={q2}, r={r})"
        return f"WeightPair(q={self.q.tolist()}, r={self.r.tolist()})"


class CareSolution(NamedTuple):
    p: np.ndarray
    residual_norm: float
    iterations: int


def solve_lyapunov(a, q) -> np.ndarray:
    """Solve a^T X + X a + q = 0 through the Kronecker-vectorized system."""
    a = _as_matrix(a)
    q = _as_matrix(q)
    n = a.shape[0]
    identity = np.eye(n)
    m = np.kron(identity, a.T) + np.kron(a.T, identity)

    if not np.all(np.isfinite(m)):
        raise SingularLyapunovException("Lyapunov operator has non-finite entries")

    singular_values = np.linalg.svd(m, compute_uv=False)
    if singular_values[-1] <= singular_values[0] / CONDITION_LIMIT:
        raise SingularLyapunovException(
            f"Lyapunov operator is singular (sigma_min={singular_values[-1]:.3e}, "
            f"sigma_max={singular_values[0]:.3e})"
        )

    try:
        x = np.linalg.solve(m, -q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as e:
        raise SingularLyapunovException(f"Lyapunov solve failed: {e}") from e

    x = x.reshape((n, n), order="F")
    return 0.5 * (x + x.T)


def is_positive_definite(m) -> bool:
    m = _as_matrix(m)
    if frobenius(m - m.T) > SYMMETRY_TOLERANCE * frobenius(m):
        raise AsymmetricMatrixException(f"Matrix is not symmetric: {m.tolist()}")
    if not np.all(np.isfinite(m)):
        return False

    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def is_hurwitz(a) -> bool:
    a = _as_matrix(a)
    try:
        x = solve_lyapunov(a, np.eye(a.shape[0]))
    except SingularLyapunovException:
        return False
    return is_positive_definite(x)


def riccati_residual(a, b, w: WeightPair, p) -> float:
    a = _as_matrix(a)
    b = _as_matrix(b)
    s = b @ np.linalg.solve(w.r, b.T)
    return frobenius(a.T @ p + p @ a - p @ s @ p + w.q)


def _hamiltonian_start(
    a: np.ndarray, s: np.ndarray, q: np.ndarray
) -> Optional[np.ndarray]:
    """P = U2 U1^-1 from the stable invariant subspace of the Hamiltonian matrix."""
    n = a.shape[0]
    hamiltonian = np.block([[a, -s], [-q, -a.T]])
    if not np.all(np.isfinite(hamiltonian)):
        return None

    values, vectors = np.linalg.eig(hamiltonian)
    stable = vectors[:, values.real < 0]
    if stable.shape[1] != n:
        logger.debug(f"Hamiltonian has {stable.shape[1]} stable eigenvalues of {2 * n}")
        return None

    u1, u2 = stable[:n], stable[n:]
    try:
        p = np.linalg.solve(u1.T, u2.T).T
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(p)):
        return None
    if np.max(np.abs(p.imag)) > IMAGINARY_TOLERANCE * max(np.max(np.abs(p.real)), 1):
        return None

    p = p.real
    p = 0.5 * (p + p.T)
    if not is_hurwitz(a - s @ p):
        return None
    return p


def _riccati_flow_start(a: np.ndarray, s: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Integrate the Riccati flow from P = 0 until it is close to the solution.

    Close means a residual below a fraction of the state weight and a Hurwitz
    closed loop A - S P.
    """
    p = np.zeros_like(a)
    q_norm = frobenius(q)
    scale = frobenius(a) + math.sqrt(frobenius(s) * q_norm)
    assert scale > 0, "Riccati flow is stationary"
    h = 0.5 / scale

    def field(x):
        return a.T @ x + x @ a - x @ s @ x + q

    for step in range(1, MAX_FLOW_STEPS + 1):
        try:
            p = rk4_step(p, field, h)
        except DivergenceException as e:
            raise RiccatiNoConvergenceException(
                f"Riccati flow overflowed after {step} steps"
            ) from e
        p = 0.5 * (p + p.T)
        if frobenius(field(p)) > FLOW_RESIDUAL_FRACTION * q_norm:
            continue
        if is_hurwitz(a - s @ p):
            logger.debug(f"Riccati flow settled after {step} steps")
            return p

    raise RiccatiNoConvergenceException(
        f"Riccati flow did not reach a stabilizing solution in {MAX_FLOW_STEPS} steps"
    )


def _newton_kleinman(
    a, b, w: WeightPair, p, tol: float
) -> Tuple[np.ndarray, float, int]:
    r_inv_bt = np.linalg.solve(w.r, b.T)
    q_norm = frobenius(w.q)

    def newton_step(p):
        gain = r_inv_bt @ p
        return solve_lyapunov(a - b @ gain, w.q + gain.T @ w.r @ gain)

    iterations = 0
    residual = riccati_residual(a, b, w, p)
    while residual > tol * q_norm:
        if iterations >= MAX_ITERATIONS:
            raise RiccatiNoConvergenceException(
                f"Newton-Kleinman stalled at residual {residual:.3e} "
                f"after {iterations} iterations"
            )
        p = newton_step(p)
        iterations += 1
        residual = riccati_residual(a, b, w, p)
        logger.debug(f"Newton-Kleinman iteration {iterations}: residual {residual:.3e}")

    polished = newton_step(p)
    polished_residual = riccati_residual(a, b, w, polished)
    if polished_residual <= residual:
        p, residual = polished, polished_residual
        iterations += 1
    return p, residual, iterations


def solve_care(a, b, w: WeightPair, tol: float = DEFAULT_TOLERANCE) -> CareSolution:
    a = _as_matrix(a)
    b = _as_matrix(b)
    assert a.shape == w.q.shape, f"State weight {w.q.shape} does not match A {a.shape}"
    assert b.shape == (a.shape[0], w.r.shape[0]), f"B has wrong shape {b.shape}"

    s = b @ np.linalg.solve(w.r, b.T)

    p = None
    start = _hamiltonian_start(a, s, w.q)
    if start is not None:
        try:
            p, residual, iterations = _newton_kleinman(a, b, w, start, tol)
        except (SingularLyapunovException, RiccatiNoConvergenceException) as e:
            logger.debug(f"Newton-Kleinman from the Hamiltonian start failed: {e}")
    if p is None:
        start = _riccati_flow_start(a, s, w.q)
        p, residual, iterations = _newton_kleinman(a, b, w, start, tol)

    if not is_positive_definite(p):
        raise CertificationException("Riccati solution is not positive definite")
    if not is_hurwitz(a - s @ p):
        raise CertificationException("Riccati closed loop is not Hurwitz")

    return CareSolution(p, residual, iterations)


def gain_from_solution(p: CareSolution, b, r) -> np.ndarray:
    return np.linalg.solve(_as_matrix(r), _as_matrix(b).T @ p.p)
