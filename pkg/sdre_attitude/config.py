"""Run configuration: INI text with packaged defaults for every key."""
import configparser
import hashlib
import json
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from importlib.resources import files
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from sdre_attitude.attitude import EulerAngles, mrp_from_euler
from sdre_attitude.dynamics import InertiaMatrix
from sdre_attitude.exceptions import (
    ConfigParseException,
    ConfigValidationException,
    MrpSingularityException,
)
from sdre_attitude.gaintable import BreakpointGrid
from sdre_attitude.riccati import WeightPair
from sdre_attitude.sim import Scenario

logger = logging.getLogger("sdre_attitude").getChild(__name__)

DEGREE = math.pi / 180
INERTIA_KEYS = ("jxx", "jyy", "jzz", "jxy", "jxz", "jyz")


class WeightCase(Enum):
    CASE_1 = "1"
    CASE_2 = "2"
    CASE_3 = "3"
    CASE_4 = "4"

    def get_case_data(self) -> dict:
        data = json.loads(
            files("sdre_attitude.data").joinpath("weight_cases.json").read_text()
        )
        return data[self.value]

    @property
    def weights(self) -> WeightPair:
        data = self.get_case_data()
        return WeightPair.diagonal(data["q1"], data["q2"], data["r"])

    @property
    def title(self) -> str:
        return f"case {self.value} {self.get_case_data()['title']}"


class Setting:
    """One configuration key: arity, bounds and the factor to internal units."""

    def __init__(
        self,
        section: str,
        name: str,
        kind: type = float,
        size: Optional[int] = 1,
        factor: float = 1.0,
        min: Optional[float] = None,
        max: Optional[float] = None,
        positive: bool = False,
        optional: bool = False,
        unit: Optional[str] = None,
    ):
        assert section and name, "Section and name must be defined"
        assert not (factor != 1 and kind not in (float,)), "Only floats can be scaled"

        self.section = section
        self.name = name
        self.kind = kind
        self.size = size
        self.factor = factor
        self.min = min
        self.max = max
        self.positive = positive
        self.optional = optional
        self.unit = unit

    @property
    def key(self) -> str:
        return f"{self.section}.{self.name}"

    def parse(self, text: str):
        text = text.strip()
        if self.kind is str:
            return text
        if self.kind is bool:
            lowered = text.lower()
            if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ConfigValidationException(self.key, f"'{text}' is not a boolean")
            return configparser.ConfigParser.BOOLEAN_STATES[lowered]

        tokens = text.replace("−", "-").split()
        if not tokens and self.optional:
            return None
        if self.size is not None and len(tokens) != self.size:
            raise ConfigValidationException(
                self.key, f"expected {self.size} value(s), got {len(tokens)}"
            )
        if not tokens:
            raise ConfigValidationException(self.key, "value is missing")

        try:
            values = [self.kind(token) for token in tokens]
        except ValueError as e:
            raise ConfigValidationException(self.key, str(e)) from e

        try:
            self.check_value_bounds(values)
        except AssertionError as e:
            raise ConfigValidationException(self.key, str(e)) from e

        if self.kind is float:
            values = [v * self.factor for v in values]
        if self.size == 1:
            return values[0]
        return np.array(values)

    def check_value_bounds(self, values):
        for value in values:
            if self.kind is float:
                assert math.isfinite(value), f"{self.key} value {value} is not finite"
            if self.positive:
                assert value > 0, f"{self.key} value {value} must be positive"
            if self.min is not None:
                assert (
                    value >= self.min
                ), f"{self.key} value {value} is smaller than min({self.min}) allowed"
            if self.max is not None:
                assert (
                    value <= self.max
                ), f"{self.key} value {value} is larger than max({self.max}) allowed"

    def __repr__(self):
        return f"Setting {self.key}, unit: {self.unit}"


SETTINGS = [
    Setting("inertia", "jxx", unit="kg*m^2"),
    Setting("inertia", "jyy", unit="kg*m^2"),
    Setting("inertia", "jzz", unit="kg*m^2"),
    Setting("inertia", "jxy", unit="kg*m^2"),
    Setting("inertia", "jxz", unit="kg*m^2"),
    Setting("inertia", "jyz", unit="kg*m^2"),
    Setting("weights", "q1", positive=True),
    Setting("weights", "q2", positive=True),
    Setting("weights", "r", positive=True),
    Setting("grid", "sigma", size=None),
    Setting("grid", "rate_dps", size=None, factor=DEGREE, unit="rad/s"),
    Setting("grid", "tolerance", positive=True),
    Setting("grid", "workers", kind=int, min=1),
    Setting("scenario", "sigma", size=3, optional=True),
    Setting("scenario", "euler_deg", size=3, factor=DEGREE, unit="rad"),
    Setting("scenario", "rate_dps", size=3, factor=DEGREE, unit="rad/s"),
    Setting("scenario", "orbit_rate_dps", size=3, factor=DEGREE, unit="rad/s"),
    Setting("scenario", "dt", positive=True, unit="s"),
    Setting("scenario", "duration", positive=True, unit="s"),
    Setting("scenario", "settle_threshold", positive=True),
    Setting("montecarlo", "runs", kind=int, min=1),
    Setting("montecarlo", "level", min=0, max=0.99),
    Setting("montecarlo", "seed", kind=int, min=0),
    Setting("montecarlo", "workers", kind=int, min=1),
    Setting("output", "directory", kind=str),
    Setting("output", "trajectory", kind=str),
    Setting("output", "table", kind=str),
    Setting("output", "metrics", kind=str),
    Setting("output", "plot", kind=bool),
]


@dataclass(frozen=True, eq=False)
class RunConfig:
    inertia: InertiaMatrix
    weights: WeightPair
    grid: BreakpointGrid
    tolerance: float
    build_workers: int
    initial_sigma: np.ndarray
    initial_rate: np.ndarray
    orbit_rate: np.ndarray
    dt: float
    duration: float
    settle_threshold: float
    runs: int
    level: float
    seed: int
    montecarlo_workers: int
    output_directory: Path
    trajectory_file: str
    table_file: str
    metrics_file: str
    plot: bool
    digest: str

    def scenario(self, table) -> Scenario:
        return Scenario(
            initial_sigma=self.initial_sigma,
            initial_omega_e=self.initial_rate,
            omega_io=self.orbit_rate,
            plant_inertia=self.inertia,
            controller_inertia=self.inertia,
            table=table,
            dt=self.dt,
            duration=self.duration,
        )

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def _new_parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), default_section="__none__"
    )


def _read_defaults() -> configparser.ConfigParser:
    parser = _new_parser()
    parser.read_string(
        files("sdre_attitude.data").joinpath("defaults.ini").read_text(),
        source="defaults.ini",
    )
    return parser


def _error_line(e: configparser.Error) -> Optional[int]:
    if getattr(e, "lineno", None) is not None:
        return e.lineno
    errors = getattr(e, "errors", None)
    if errors:
        return errors[0][0]
    return None


def _digest(values: Dict[str, str]) -> str:
    canonical = "\n".join(f"{key} = {values[key]}" for key in sorted(values))
    return hashlib.sha256(canonical.encode()).hexdigest()


def parse_config(source: str) -> RunConfig:
    defaults = _read_defaults()
    user = _new_parser()
    try:
        user.read_string(source, source="<config>")
    except configparser.Error as e:
        raise ConfigParseException(e.message.strip().splitlines()[0], _error_line(e))

    for section in user.sections():
        if not defaults.has_section(section):
            raise ConfigValidationException(section, "unknown section")
        for name in user[section]:
            if not defaults.has_option(section, name):
                raise ConfigValidationException(f"{section}.{name}", "unknown key")

    texts = {}
    values = {}
    for setting in SETTINGS:
        if user.has_option(setting.section, setting.name):
            text = user.get(setting.section, setting.name)
        else:
            text = defaults.get(setting.section, setting.name)
        texts[setting.key] = text.strip()
        values[setting.key] = setting.parse(text)

    try:
        inertia = InertiaMatrix.from_entries(
            *(values[f"inertia.{name}"] for name in INERTIA_KEYS)
        )
    except AssertionError as e:
        raise ConfigValidationException("inertia", str(e)) from e

    try:
        grid = BreakpointGrid.uniform(values["grid.sigma"], values["grid.rate_dps"])
    except AssertionError as e:
        raise ConfigValidationException("grid", str(e)) from e

    sigma = values["scenario.sigma"]
    if sigma is None:
        euler = EulerAngles(*values["scenario.euler_deg"])
        if not abs(euler.pitch) < math.pi / 2:
            raise ConfigValidationException(
                "scenario.euler_deg", "pitch must lie strictly inside (-90, 90) degrees"
            )
        try:
            sigma = mrp_from_euler(euler)
        except MrpSingularityException as e:
            raise ConfigValidationException("scenario.euler_deg", str(e)) from e
    elif user.has_option("scenario", "euler_deg"):
        raise ConfigValidationException(
            "scenario.sigma", "set either sigma or euler_deg, not both"
        )

    if values["scenario.duration"] < values["scenario.dt"]:
        raise ConfigValidationException(
            "scenario.duration", "must cover at least one integration step"
        )

    config = RunConfig(
        inertia=inertia,
        weights=WeightPair.diagonal(
            values["weights.q1"], values["weights.q2"], values["weights.r"]
        ),
        grid=grid,
        tolerance=values["grid.tolerance"],
        build_workers=values["grid.workers"],
        initial_sigma=np.asarray(sigma, dtype=float),
        initial_rate=values["scenario.rate_dps"],
        orbit_rate=values["scenario.orbit_rate_dps"],
        dt=values["scenario.dt"],
        duration=values["scenario.duration"],
        settle_threshold=values["scenario.settle_threshold"],
        runs=values["montecarlo.runs"],
        level=values["montecarlo.level"],
        seed=values["montecarlo.seed"],
        montecarlo_workers=values["montecarlo.workers"],
        output_directory=Path(values["output.directory"]),
        trajectory_file=values["output.trajectory"],
        table_file=values["output.table"],
        metrics_file=values["output.metrics"],
        plot=values["output.plot"],
        digest=_digest(texts),
    )
    logger.debug(f"Parsed configuration {config.digest}")
    return config


def load_config(path: Optional[Union[str, Path]]) -> RunConfig:
    if path is None:
        return parse_config("")
    return parse_config(Path(path).read_text())
