"""Lookup table of pointwise SDRE gains over a 6-D breakpoint grid.

Vertices are ordered row-major over (sigma1, sigma2, sigma3, omega1, omega2,
omega3) breakpoint indices and every vertex stores a 3x6 gain. Queries are
interpolated multilinearly inside their cell; coordinates beyond the grid are
clamped to the outermost breakpoints.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Mapping, NamedTuple, Optional, Tuple

import numpy as np

from sdre_attitude.dynamics import ErrorState, InertiaMatrix, sdc_factorize
from sdre_attitude.exceptions import (
    GainTableBuildException,
    GainTableFormatException,
    GainTableLengthException,
    GainTableVersionException,
    SdreException,
)
from sdre_attitude.riccati import (
    DEFAULT_TOLERANCE,
    WeightPair,
    gain_from_solution,
    solve_care,
)

logger = logging.getLogger("sdre_attitude").getChild(__name__)

FORMAT_VERSION = 1
END_OF_HEADER = "end_header"
END_OF_TABLE = "end_table"
AXIS_COUNT = 6
GAIN_SHAPE = (3, 6)
GAIN_SIZE = 18

_CORNERS = np.array(list(itertools.product((False, True), repeat=AXIS_COUNT)))


class BreakpointGrid:
    axes: Tuple[np.ndarray, ...]

    def __init__(self, axes) -> None:
        axes = tuple(np.array(axis, dtype=float).reshape(-1) for axis in axes)
        assert len(axes) == AXIS_COUNT, f"Grid needs {AXIS_COUNT} axes, got {len(axes)}"
        for i, axis in enumerate(axes):
            assert axis.size >= 1, f"Axis {i} has no breakpoints"
            assert np.all(np.isfinite(axis)), f"Axis {i} has non-finite breakpoints"
            assert np.all(
                np.diff(axis) > 0
            ), f"Axis {i} breakpoints must be strictly increasing: {axis.tolist()}"
            axis.setflags(write=False)
        self.axes = axes

    @classmethod
    def uniform(cls, sigma_breakpoints, rate_breakpoints) -> "BreakpointGrid":
        """Same breakpoints on the three attitude axes and on the three rate axes."""
        return cls([sigma_breakpoints] * 3 + [rate_breakpoints] * 3)

    @classmethod
    def default(cls) -> "BreakpointGrid":
        return cls.uniform([-1.0, 0.0, 1.0], np.radians([-5.0, 0.0, 5.0]))

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(axis.size for axis in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def vertex(self, index) -> ErrorState:
        return np.array([axis[i] for axis, i in zip(self.axes, index)])

    def __eq__(self, other):
        if not isinstance(other, BreakpointGrid):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))

    def __repr__(self):
        return f"BreakpointGrid(shape={self.shape})"


class BuildStats(NamedTuple):
    iterations: np.ndarray
    residuals: np.ndarray


class GainTable:
    def __init__(
        self,
        grid: BreakpointGrid,
        gains,
        inertia: InertiaMatrix,
        weights: WeightPair,
        tolerance: float,
        stats: Optional[BuildStats] = None,
    ) -> None:
        gains = np.array(gains, dtype=float)
        assert gains.shape == grid.shape + GAIN_SHAPE, (
            f"Gain array shape {gains.shape} does not match grid {grid.shape}"
        )
        gains.setflags(write=False)

        self.grid = grid
        self.gains = gains
        self.inertia = inertia
        self.weights = weights
        self.tolerance = tolerance
        self.stats = stats

    def _locate(self, x: ErrorState):
        lo = np.zeros(AXIS_COUNT, dtype=int)
        hi = np.zeros(AXIS_COUNT, dtype=int)
        t = np.zeros(AXIS_COUNT)
        for i, axis in enumerate(self.grid.axes):
            if axis.size == 1:
                continue
            value = min(max(x[i], axis[0]), axis[-1])
            j = int(np.searchsorted(axis, value, side="right")) - 1
            j = min(max(j, 0), axis.size - 2)
            lo[i] = j
            hi[i] = j + 1
            t[i] = (value - axis[j]) / (axis[j + 1] - axis[j])
        return lo, hi, t

    def lookup(self, x: ErrorState) -> Tuple[np.ndarray, int]:
        """Interpolated gain and the flat index of the cell's lower vertex."""
        lo, hi, t = self._locate(x)
        indices = np.where(_CORNERS, hi, lo)
        weights = np.prod(np.where(_CORNERS, t, 1.0 - t), axis=1)
        corners = self.gains[tuple(indices.T)]
        gain = np.tensordot(weights, corners, axes=1)
        return gain, int(np.ravel_multi_index(tuple(lo), self.grid.shape))

    def __repr__(self):
        return f"GainTable({self.grid}, weights={self.weights})"


def interpolate_gain(table: GainTable, x: ErrorState) -> np.ndarray:
    gain, _ = table.lookup(x)
    return gain


def _solve_vertex(grid, index, J, w, tol):
    try:
        sdc = sdc_factorize(grid.vertex(index), J)
        solution = solve_care(sdc.a, sdc.b, w, tol)
        return gain_from_solution(solution, sdc.b, w.r), solution, None
    except SdreException as e:
        return None, None, f"{type(e).__name__}: {e}"


def build_table(
    grid: BreakpointGrid,
    J: InertiaMatrix,
    w: WeightPair,
    tol: float = DEFAULT_TOLERANCE,
    workers: int = 1,
) -> GainTable:
    indices = list(np.ndindex(*grid.shape))
    logger.info(f"Solving {len(indices)} breakpoint vertices with {w}")

    def solve(index):
        return _solve_vertex(grid, index, J, w, tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(solve, indices))
    else:
        results = [solve(index) for index in indices]

    gains = np.zeros(grid.shape + GAIN_SHAPE)
    iterations = np.zeros(grid.shape, dtype=int)
    residuals = np.zeros(grid.shape)
    failures = []
    for index, (gain, solution, error) in zip(indices, results):
        if error is not None:
            failures.append((index, error))
            continue
        gains[index] = gain
        iterations[index] = solution.iterations
        residuals[index] = solution.residual_norm
        logger.debug(f"Vertex {index}: {solution.iterations} iterations")

    if failures:
        raise GainTableBuildException(failures)

    logger.info(
        f"Gain table built: max residual {residuals.max():.3e}, "
        f"max iterations {iterations.max()}"
    )
    return GainTable(grid, gains, J, w, tol, BuildStats(iterations, residuals))


def _fmt(values) -> str:
    return " ".join(format(float(v), ".17g") for v in np.ravel(values))


def save_table(
    table: GainTable, destination, provenance: Optional[Mapping[str, object]] = None
) -> None:
    lines = ["# sdre-attitude gain table"]
    for key, value in (provenance or {}).items():
        lines.append(f"# {key} = {value}")

    lines.append(f"format_version = {FORMAT_VERSION}")
    for i, axis in enumerate(table.grid.axes):
        lines.append(f"axis_{i} = {_fmt(axis)}")
    lines.append(f"inertia = {_fmt(table.inertia.matrix)}")
    lines.append(f"state_weight = {_fmt(table.weights.q)}")
    lines.append(f"input_weight = {_fmt(table.weights.r)}")
    if table.weights.coefficients is not None:
        lines.append(f"weight_coefficients = {_fmt(table.weights.coefficients)}")
    lines.append(f"tolerance = {_fmt([table.tolerance])}")
    lines.append(f"vertices = {table.grid.size}")
    lines.append(END_OF_HEADER)

    for index in np.ndindex(*table.grid.shape):
        indices = " ".join(str(i) for i in index)
        lines.append(f"{indices} {_fmt(table.gains[index])}")
    lines.append(END_OF_TABLE)

    Path(destination).write_text("\n".join(lines) + "\n")
    logger.info(f"Saved {table.grid.size} gains to {destination}")


def _floats(header, key, count=None) -> np.ndarray:
    try:
        values = np.array([float(v) for v in header[key].split()])
    except KeyError:
        raise GainTableFormatException(f"Header key '{key}' is missing")
    except ValueError as e:
        raise GainTableFormatException(f"Header key '{key}' is malformed: {e}")
    if count is not None and values.size != count:
        raise GainTableFormatException(
            f"Header key '{key}' has {values.size} values, expected {count}"
        )
    return values


def load_table(source) -> GainTable:
    lines = Path(source).read_text().splitlines()

    header = {}
    body_start = None
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if text == END_OF_HEADER:
            body_start = lineno
            break
        key, sep, value = text.partition("=")
        if not sep:
            raise GainTableFormatException(f"line {lineno}: expected 'key = value'")
        header[key.strip()] = value.strip()

    if "format_version" not in header:
        raise GainTableFormatException("Missing format_version header")
    if header["format_version"] != str(FORMAT_VERSION):
        raise GainTableVersionException(
            f"Unsupported format version {header['format_version']}, "
            f"expected {FORMAT_VERSION}"
        )
    if body_start is None:
        raise GainTableLengthException("Table header is truncated")

    try:
        grid = BreakpointGrid([_floats(header, f"axis_{i}") for i in range(AXIS_COUNT)])
        inertia = InertiaMatrix(_floats(header, "inertia", 9).reshape(3, 3))
        coefficients = None
        if "weight_coefficients" in header:
            coefficients = tuple(_floats(header, "weight_coefficients", 3).tolist())
        weights = WeightPair(
            _floats(header, "state_weight", 36).reshape(6, 6),
            _floats(header, "input_weight", 9).reshape(3, 3),
            coefficients,
        )
    except AssertionError as e:
        raise GainTableFormatException(f"Invalid table header: {e}")
    tolerance = float(_floats(header, "tolerance", 1)[0])

    declared = int(_floats(header, "vertices", 1)[0])
    if declared != grid.size:
        raise GainTableFormatException(
            f"Header declares {declared} vertices but the grid has {grid.size}"
        )

    body = [line.strip() for line in lines[body_start:] if line.strip()]
    if not body or body[-1] != END_OF_TABLE:
        raise GainTableLengthException("Table body is truncated, end marker missing")
    body = body[:-1]
    if len(body) != grid.size:
        raise GainTableLengthException(
            f"Table body has {len(body)} vertex lines, expected {grid.size}"
        )

    gains = np.zeros(grid.shape + GAIN_SHAPE)
    for line, index in zip(body, np.ndindex(*grid.shape)):
        tokens = line.split()
        if len(tokens) != AXIS_COUNT + GAIN_SIZE:
            raise GainTableLengthException(
                f"Vertex {index} line has {len(tokens)} fields, "
                f"expected {AXIS_COUNT + GAIN_SIZE}"
            )
        try:
            if tuple(int(t) for t in tokens[:AXIS_COUNT]) != index:
                raise GainTableFormatException(
                    f"Vertex line out of order, expected indices {index}"
                )
            gains[index] = np.array([float(t) for t in tokens[AXIS_COUNT:]]).reshape(
                GAIN_SHAPE
            )
        except ValueError as e:
            raise GainTableFormatException(f"Vertex {index} line is malformed: {e}")

    logger.info(f"Loaded {grid.size} gains from {source}")
    return GainTable(grid, gains, inertia, weights, tolerance)
