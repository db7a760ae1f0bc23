"""Monte-Carlo campaigns over inertia uncertainty.

Every run perturbs the plant inertia only; the controller keeps designing
with the nominal inertia it was built for.
"""
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, List, NamedTuple, Optional

import numpy as np

from sdre_attitude.dynamics import InertiaMatrix
from sdre_attitude.exceptions import DivergenceException, InertiaPerturbationException
from sdre_attitude.riccati import is_positive_definite
from sdre_attitude.sim import Scenario, run_closed_loop
from sdre_attitude.sim.metrics import DEFAULT_SETTLE_THRESHOLD, Metrics, compute_metrics

logger = logging.getLogger("sdre_attitude").getChild(__name__)

GENERATOR = "PCG64"
DEFAULT_LEVEL = 0.10
MAX_PERTURBATION_ATTEMPTS = 100


def perturb_inertia(J: InertiaMatrix, level: float, seed) -> InertiaMatrix:
    assert 0 <= level < 1, f"Perturbation level must be in [0, 1), got {level}"
    if level == 0:
        return J

    rng = np.random.Generator(np.random.PCG64(seed))
    entries = np.array(J.entries())
    for attempt in range(1, MAX_PERTURBATION_ATTEMPTS + 1):
        jxx, jyy, jzz, jxy, jxz, jyz = entries * rng.uniform(
            1 - level, 1 + level, size=6
        )
        candidate = np.array([[jxx, jxy, jxz], [jxy, jyy, jyz], [jxz, jyz, jzz]])
        if is_positive_definite(candidate):
            return InertiaMatrix(candidate)
        logger.debug(f"Perturbed inertia draw {attempt} is not positive definite")

    raise InertiaPerturbationException(
        f"No positive definite inertia in {MAX_PERTURBATION_ATTEMPTS} draws "
        f"at level {level}"
    )


class RunRecord(NamedTuple):
    index: int
    plant_inertia: Optional[InertiaMatrix]
    metrics: Optional[Metrics]
    error: Optional[str]

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def settled(self) -> bool:
        return self.metrics is not None and self.metrics.settled


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    runs: int
    seed: int
    level: float
    settle_threshold: float
    records: List[RunRecord]
    generator: str = GENERATOR

    @property
    def settled_count(self) -> int:
        return sum(1 for record in self.records if record.settled)

    def _completed(self) -> List[Metrics]:
        return [record.metrics for record in self.records if record.metrics is not None]

    @property
    def worst_peak_torque(self) -> float:
        return max((m.peak_torque_inf for m in self._completed()), default=float("nan"))

    @property
    def worst_settling_time(self) -> Optional[float]:
        """Largest settling time, None as soon as one run did not settle."""
        if self.settled_count < self.runs:
            return None
        return max(m.settling_time for m in self._completed())

    @property
    def worst_final_attitude_error(self) -> float:
        return max(
            (m.final_attitude_error for m in self._completed()), default=float("nan")
        )


def _execute_run(scenario: Scenario, index: int, seed, level, settle_threshold):
    plant = None
    try:
        plant = perturb_inertia(scenario.plant_inertia, level, seed)
        trajectory = run_closed_loop(scenario.with_plant_inertia(plant))
        metrics = compute_metrics(trajectory, settle_threshold)
        return RunRecord(index, plant, metrics, None)
    except (DivergenceException, InertiaPerturbationException) as e:
        logger.warning(f"Run {index} failed: {e}")
        return RunRecord(index, plant, None, str(e))


class MonteCarloCampaign:
    RUN_COMPLETE_EVENT = "run_complete"

    _listeners: defaultdict[Any, list[Callable[..., None]]]

    def __init__(
        self,
        scenario: Scenario,
        runs: int,
        level: float = DEFAULT_LEVEL,
        seed: int = 0,
        settle_threshold: float = DEFAULT_SETTLE_THRESHOLD,
        workers: int = 1,
    ):
        assert runs >= 1, f"At least one run is required, got {runs}"
        assert 0 <= level < 1, f"Perturbation level must be in [0, 1), got {level}"
        assert workers >= 1

        self.scenario = scenario
        self.runs = runs
        self.level = level
        self.seed = seed
        self.settle_threshold = settle_threshold
        self.workers = workers

        self._listeners = defaultdict(list)

    def subscribe(self, event_name: str, callback: Callable[..., None]):
        self._listeners[event_name].append(callback)

    def notify_run_complete(self, record: RunRecord):
        for listener in self._listeners[self.RUN_COMPLETE_EVENT]:
            try:
                listener(record)
            except Exception as e:
                logger.exception(e)

    def run(self) -> MonteCarloReport:
        seeds = np.random.SeedSequence(self.seed).spawn(self.runs)
        arguments = [
            (self.scenario, index, seed, self.level, self.settle_threshold)
            for index, seed in enumerate(seeds)
        ]
        logger.info(
            f"Starting {self.runs} runs at level {self.level} with seed {self.seed}"
        )

        records = []
        if self.workers > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                # map yields in submission order, which keeps reports deterministic
                for record in executor.map(_execute_run, *zip(*arguments)):
                    records.append(record)
                    self.notify_run_complete(record)
        else:
            for args in arguments:
                record = _execute_run(*args)
                records.append(record)
                self.notify_run_complete(record)

        report = MonteCarloReport(
            self.runs, self.seed, self.level, self.settle_threshold, records
        )
        logger.info(f"{report.settled_count}/{self.runs} runs settled")
        return report


def monte_carlo(
    s: Scenario,
    runs: int,
    level: float = DEFAULT_LEVEL,
    seed: int = 0,
    settle_threshold: float = DEFAULT_SETTLE_THRESHOLD,
    workers: int = 1,
) -> MonteCarloReport:
    return MonteCarloCampaign(s, runs, level, seed, settle_threshold, workers).run()
