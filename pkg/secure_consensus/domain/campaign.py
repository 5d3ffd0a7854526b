import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from dataclasses import replace
from typing import Optional

import numpy as np

from secure_consensus.domain.detector import StackedSystem
from secure_consensus.domain.detector import build_stacked_system
from secure_consensus.domain.detector import detect
from secure_consensus.domain.detector import false_alarm_bound
from secure_consensus.domain.sim import Scenario
from secure_consensus.domain.sim import measurement_matrix
from secure_consensus.domain.sim import run
from secure_consensus.providers.io import ClickIOProvider
from secure_consensus.providers.validation import ValidationException


class CampaignException(ValidationException):
    pass


@dataclass(frozen=True)
class CampaignResult:
    agent: int
    trials: int
    alarms: int
    alpha_bound: float
    seed: int

    def __post_init__(self):
        if not 0 <= self.alarms <= self.trials:
            raise CampaignException(f"{self.alarms} alarms cannot come from {self.trials} trials.")

    @property
    def empirical_rate(self) -> float:
        return self.alarms / self.trials

    @property
    def tolerance(self) -> float:
        """Binomial slack of three standard deviations around the bound."""
        return 3 * math.sqrt(self.alpha_bound / self.trials)

    @property
    def within_bound(self) -> bool:
        return self.empirical_rate <= self.alpha_bound + self.tolerance

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "trials": self.trials,
            "alarms": self.alarms,
            "empirical_rate": self.empirical_rate,
            "alpha_bound": self.alpha_bound,
            "within_bound": self.within_bound,
            "seed": self.seed,
        }


def alarmed_detectors(scenario: Scenario, systems: dict, trial: int) -> tuple:
    """One attack-free trial; True for every detector that alarmed at least once."""
    trace = run(scenario, trial=trial)
    return tuple(
        bool(
            detect(
                detector.agent,
                trace.measurements[detector.agent],
                systems[detector.agent],
                detector.c,
                detector.rho,
                scenario.phi,
            ).alarms.any()
        )
        for detector in scenario.detectors
    )


def _run_chunk(arguments: tuple) -> np.ndarray:
    scenario, systems, trials = arguments
    return np.array([alarmed_detectors(scenario, systems, t) for t in trials], dtype=int).reshape(
        len(trials), len(scenario.detectors)
    )


class Campaign:
    """
    Monte-Carlo estimate of the false alarm rate: the attack is silenced and
    each trial draws its noise from the (seed, trial) substream, so counts do
    not depend on how trials are spread over workers.
    """

    def __init__(
        self,
        scenario: Scenario,
        workers: Optional[int] = None,
        io: ClickIOProvider = ClickIOProvider(),
    ):
        if not scenario.detectors:
            raise CampaignException("A campaign needs at least one detector.")
        self.scenario = replace(scenario, attack=scenario.attack.silenced())
        self.workers = workers or os.cpu_count() or 1
        self.io = io
        self.systems: dict[int, StackedSystem] = {
            detector.agent: build_stacked_system(
                scenario.weights.A, measurement_matrix(scenario.graph, detector.agent), io=io
            )
            for detector in scenario.detectors
        }

    def chunks(self, trials: int) -> list:
        size = math.ceil(trials / self.workers)
        return [
            (self.scenario, self.systems, range(start, min(start + size, trials)))
            for start in range(0, trials, size)
        ]

    def run(self, trials: int) -> list[CampaignResult]:
        if trials < 1:
            raise CampaignException(f"A campaign needs at least one trial, got {trials}.")
        if self.workers < 1:
            raise CampaignException(f"workers must be positive, got {self.workers}.")

        self.io.debug(
            f"Running {trials} attack-free trials on {self.workers} worker(s) "
            f"(seed {self.scenario.seed}, horizon {self.scenario.horizon})."
        )

        chunks = self.chunks(trials)
        if self.workers == 1:
            counts = [_run_chunk(chunk) for chunk in chunks]
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                counts = list(executor.map(_run_chunk, chunks))

        alarms = np.sum([chunk.sum(axis=0) for chunk in counts], axis=0)

        return [
            CampaignResult(
                agent=detector.agent,
                trials=trials,
                alarms=int(alarms[index]),
                alpha_bound=false_alarm_bound(
                    self.systems[detector.agent], detector.c, detector.rho, self.scenario.phi
                ),
                seed=self.scenario.seed,
            )
            for index, detector in enumerate(self.scenario.detectors)
        ]
