from typing import Callable

import numpy as np

from secure_consensus.constants import MAX_SEED
from secure_consensus.domain.graph import validate_weight_matrix
from secure_consensus.providers.io import ClickIOProvider
from secure_consensus.providers.validation import ValidationException


class ScenarioValidatorError(ValidationException):
    pass


class ScenarioValidator:
    """
    Runs every validation against a scenario and raises one
    ScenarioValidatorError listing all failures.

    Validations take the scenario and return a list of error messages.
    """

    def __init__(
        self,
        validations: list[Callable] = None,
        io: ClickIOProvider = ClickIOProvider(),
    ):
        self.validations = validations or [
            self.validate_graph_connected,
            self.validate_weight_matrix,
            self.validate_initial_state,
            self.validate_noise,
            self.validate_attackers,
            self.warn_non_summable_attack,
            self.validate_detectors,
            self.validate_horizon_covers_detection_window,
        ]
        self.io = io

    @classmethod
    def for_simulation(cls, io: ClickIOProvider = ClickIOProvider()) -> "ScenarioValidator":
        """
        A simulation only needs a non-negative horizon; detection windows and
        the summability warning belong to the commands that use them.
        """
        validator = cls(io=io)
        skipped = (
            validator.validate_horizon_covers_detection_window,
            validator.warn_non_summable_attack,
        )
        validator.validations = [
            validation for validation in validator.validations if validation not in skipped
        ] + [validator.validate_horizon_non_negative]
        return validator

    def collect_errors(self, scenario) -> list[str]:
        errors = []
        for validation in self.validations:
            errors.extend(validation(scenario))
        return errors

    def run_validations(self, scenario):
        errors = self.collect_errors(scenario)
        if errors:
            raise ScenarioValidatorError(
                "The scenario is invalid:\n" + "\n".join(f"  - {error}" for error in errors)
            )

    def validate_graph_connected(self, scenario) -> list[str]:
        if not scenario.graph.connected:
            return ["graph is not connected"]
        return []

    def validate_weight_matrix(self, scenario) -> list[str]:
        report = validate_weight_matrix(scenario.weights, scenario.graph)
        return report.failures()

    def validate_initial_state(self, scenario) -> list[str]:
        x0 = np.asarray(scenario.x0, dtype=float)
        if x0.shape != (scenario.n,):
            return [f"x0 has {x0.size} entries but the graph has {scenario.n} agents"]
        if not np.all(np.isfinite(x0)):
            return ["x0 contains non-finite values"]
        return []

    def validate_noise(self, scenario) -> list[str]:
        errors = []
        if not 0.0 < scenario.phi < 1.0:
            errors.append(f"noise decay must satisfy 0 < phi < 1 (phi = {scenario.phi})")
        if not 0 <= scenario.seed <= MAX_SEED:
            errors.append(f"noise seed must lie in 0..2**64 - 1 (seed = {scenario.seed})")
        return errors

    def validate_attackers(self, scenario) -> list[str]:
        return [
            f"attacker {agent} is out of range 1..{scenario.n}"
            for agent in scenario.attack.attackers
            if not 1 <= agent <= scenario.n
        ]

    def warn_non_summable_attack(self, scenario) -> list[str]:
        if not scenario.attack.summable:
            self.io.warn(
                "The attack profile is not summable; consensus error intervals do not apply."
            )
        return []

    def validate_detectors(self, scenario) -> list[str]:
        errors = []
        for detector in scenario.detectors:
            if not 1 <= detector.agent <= scenario.n:
                errors.append(f"detector agent {detector.agent} is out of range 1..{scenario.n}")
            if detector.agent in scenario.attack.attackers:
                errors.append(f"detector agent {detector.agent} is listed as an attacker")
            if not detector.c > 0:
                errors.append(f"detector {detector.agent}: c must be positive (c = {detector.c})")
            if not scenario.phi < detector.rho < 1.0:
                errors.append(
                    f"detector {detector.agent}: thresholds require phi < rho < 1 "
                    f"(phi = {scenario.phi}, rho = {detector.rho})"
                )
        return errors

    def validate_horizon_covers_detection_window(self, scenario) -> list[str]:
        if scenario.horizon < scenario.n + 1:
            return [
                f"horizon {scenario.horizon} is shorter than the detection window n + 1 = {scenario.n + 1}"
            ]
        return []

    def validate_horizon_non_negative(self, scenario) -> list[str]:
        if scenario.horizon < 0:
            return [f"horizon must be non-negative (horizon = {scenario.horizon})"]
        return []
