import hashlib
import json
import math
from dataclasses import dataclass
from dataclasses import replace
from typing import Optional

import numpy as np

from secure_consensus.constants import ANALYSIS_JSON
from secure_consensus.constants import CAMPAIGN_JSON
from secure_consensus.constants import DEFAULT_BETA
from secure_consensus.constants import DEFAULT_P_MAX
from secure_consensus.constants import DEFAULT_RANDOM_WEIGHT_SCALE
from secure_consensus.constants import DEFAULT_TAIL_FRACTION
from secure_consensus.constants import DETECTION_CSV
from secure_consensus.constants import DETECTION_JSON
from secure_consensus.constants import EXPECTED_VALUE_TOLERANCE
from secure_consensus.constants import MIN_RATE_TRACE_LENGTH
from secure_consensus.constants import TRACE_CSV
from secure_consensus.domain.analysis import UnionErrorInterval
from secure_consensus.domain.analysis import consensus_error
from secure_consensus.domain.analysis import convergence_rate_bound
from secure_consensus.domain.analysis import detectability_check
from secure_consensus.domain.analysis import empirical_convergence_rate
from secure_consensus.domain.analysis import enumerate_detectable_attacker_sets
from secure_consensus.domain.analysis import privacy_report
from secure_consensus.domain.analysis import residual_sum_term
from secure_consensus.domain.analysis import union_error_interval
from secure_consensus.domain.campaign import Campaign
from secure_consensus.domain.campaign import CampaignResult
from secure_consensus.domain.detector import DetectionReport
from secure_consensus.domain.detector import build_stacked_system
from secure_consensus.domain.detector import detect
from secure_consensus.domain.detector import false_alarm_bound
from secure_consensus.domain.detector import residuals
from secure_consensus.domain.graph import WeightMatrix
from secure_consensus.domain.graph import build_graph
from secure_consensus.domain.graph import metropolis_weights
from secure_consensus.domain.graph import random_weights
from secure_consensus.domain.graph import validate_weight_matrix
from secure_consensus.domain.scenario_validator import ScenarioValidator
from secure_consensus.domain.sim import AttackProfile
from secure_consensus.domain.sim import ConstantSignal
from secure_consensus.domain.sim import DetectorConfig
from secure_consensus.domain.sim import GeometricSignal
from secure_consensus.domain.sim import Scenario
from secure_consensus.domain.sim import SequenceSignal
from secure_consensus.domain.sim import Trace
from secure_consensus.domain.sim import ZeroSignal
from secure_consensus.domain.sim import measurement_matrix
from secure_consensus.domain.sim import run
from secure_consensus.providers.files import FileProvider
from secure_consensus.providers.io import ClickIOProvider
from secure_consensus.providers.scenario import ScenarioProvider

yes = "\033[92m✔\033[0m"
no = "\033[91m✖\033[0m"


@dataclass(frozen=True)
class AnalysisSettings:
    beta: float = DEFAULT_BETA
    p_max: int = DEFAULT_P_MAX
    tail_fraction: float = DEFAULT_TAIL_FRACTION


def scenario_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def build_signal(signal: dict):
    kind = signal["type"]
    if kind == "constant":
        return ConstantSignal(float(signal["a"]))
    if kind == "geometric":
        return GeometricSignal(float(signal["a"]), float(signal["gamma"]))
    if kind == "sequence":
        return SequenceSignal(tuple(float(value) for value in signal["values"]))
    return ZeroSignal()


def build_weights(config, graph) -> WeightMatrix:
    if config == "metropolis":
        return metropolis_weights(graph)
    if isinstance(config, dict):
        random = config["random"]
        return random_weights(
            graph, random["seed"], float(random.get("scale", DEFAULT_RANDOM_WEIGHT_SCALE))
        )
    return WeightMatrix(np.array(config, dtype=float))


def scenario_from_config(
    config: dict,
    seed: Optional[int] = None,
    zero_noise: Optional[bool] = None,
    horizon: Optional[int] = None,
) -> Scenario:
    graph = build_graph(config["graph"]["n"], [tuple(edge) for edge in config["graph"]["edges"]])
    noise = config["noise"]
    attack = config.get("attack", {"agents": [], "signals": []})

    return Scenario(
        graph=graph,
        weights=build_weights(config["weights"], graph),
        x0=np.array(config["x0"], dtype=float),
        phi=float(noise["phi"]),
        seed=noise["seed"] if seed is None else seed,
        attack=AttackProfile(
            tuple(attack["agents"]), tuple(build_signal(signal) for signal in attack["signals"])
        ),
        detectors=tuple(
            DetectorConfig(detector["agent"], float(detector["c"]), float(detector["rho"]))
            for detector in config.get("detectors", [])
        ),
        horizon=config["horizon"] if horizon is None else horizon,
        zero_noise=noise.get("zero_noise", False) if zero_noise is None else zero_noise,
        attackers_add_noise=noise.get("attackers_add_noise", True),
        scenario_hash=scenario_hash(config),
    )


def analysis_settings_from_config(
    config: dict, beta: Optional[float] = None, p_max: Optional[int] = None
) -> AnalysisSettings:
    analysis = config.get("analysis", {})
    return AnalysisSettings(
        beta=float(analysis.get("beta", DEFAULT_BETA)) if beta is None else beta,
        p_max=analysis.get("p_max", DEFAULT_P_MAX) if p_max is None else p_max,
        tail_fraction=float(analysis.get("tail_fraction", DEFAULT_TAIL_FRACTION)),
    )


def finite_or_none(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


def relative_mismatch(computed: float, expected: float) -> float:
    return abs(computed - expected) / abs(expected) if expected else abs(computed)


class Experiment:
    def __init__(
        self,
        path: str,
        scenario_provider: ScenarioProvider = None,
        io: ClickIOProvider = ClickIOProvider(),
    ):
        self.path = path
        self.scenario_provider = scenario_provider or ScenarioProvider()
        self.io = io
        self._config = None

    @property
    def config(self) -> dict:
        if self._config is None:
            self._config = self.scenario_provider.load(self.path)
        return self._config

    def scenario(self, **overrides) -> Scenario:
        return scenario_from_config(self.config, **overrides)

    def validate(self) -> Scenario:
        scenario = self.scenario()
        report = validate_weight_matrix(scenario.weights, scenario.graph)

        checks = [
            ("graph connected", scenario.graph.connected),
            ("A = A^T", report.symmetric),
            ("rows sum to one (A2)", report.row_stochastic),
            ("support matches the graph", report.sparsity_matches_graph),
            ("lambda_1 = 1, |lambda_i| < 1 (A1)", report.spectrum_ok),
        ]
        self.io.table(
            ["check", "result"],
            [(name, yes if passed else no) for name, passed in checks],
            align_left="check",
        )
        self.io.info(
            "Eigenvalues: " + ", ".join(f"{value:.4f}" for value in report.eigenvalues)
        )

        ScenarioValidator(io=self.io).run_validations(scenario)
        self.io.info(f"{self.path} is valid.", fg="green")
        return scenario

    def simulate(
        self,
        out_dir: str,
        seed: Optional[int] = None,
        zero_noise: Optional[bool] = None,
        horizon: Optional[int] = None,
    ) -> tuple[Trace, list[DetectionReport]]:
        scenario = self.scenario(seed=seed, zero_noise=zero_noise, horizon=horizon)
        ScenarioValidator(io=self.io).run_validations(scenario)
        if not scenario.attackers_add_noise and scenario.attack.p:
            self.io.warn(
                f"Attackers {list(scenario.attack.attackers)} are excluded from the noise stream."
            )

        trace = run(scenario, io=self.io)
        B = scenario.attack.input_matrix(scenario.n)
        reports = []
        files = {TRACE_CSV: trace.to_csv()}
        for detector in scenario.detectors:
            sys = build_stacked_system(
                scenario.weights.A, trace.measurement_matrices[detector.agent], B, io=self.io
            )
            measurements = trace.measurements[detector.agent]
            report = replace(
                detect(detector.agent, measurements, sys, detector.c, detector.rho, scenario.phi),
                residual_sum=residual_sum_term(sys, residuals(sys, measurements)),
            )
            reports.append(report)
            files[DETECTION_CSV.format(agent=detector.agent)] = report.to_csv()
            files[DETECTION_JSON.format(agent=detector.agent)] = to_json(report.summary())

        for message in FileProvider(out_dir).write_all(files):
            self.io.debug(message)

        self.io.info(
            "Final state: " + ", ".join(f"{value:.4f}" for value in trace.x[-1])
            + f" (seed {scenario.seed}, horizon {scenario.horizon})"
        )
        self.io.table(
            ["detector", "evaluable steps", "first alarm", "alpha bound", "observed s_B"],
            [
                (
                    report.agent,
                    report.evaluable_steps,
                    "-" if report.first_alarm is None else report.first_alarm,
                    f"{report.alpha_bound:.6g}",
                    "-" if report.residual_sum is None else f"{report.residual_sum:.4f}",
                )
                for report in reports
            ],
        )
        return trace, reports

    def analyze(
        self,
        out_dir: Optional[str] = None,
        beta: Optional[float] = None,
        p_max: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> dict:
        scenario = self.scenario(seed=seed)
        ScenarioValidator(io=self.io).run_validations(scenario)
        settings = analysis_settings_from_config(self.config, beta, p_max)
        attackers = scenario.attack.attackers

        privacy = privacy_report(scenario.graph, attackers) if attackers else []
        error = consensus_error(scenario.attack, scenario.n)

        trace = run(scenario, io=self.io)
        empirical_rate = None
        if trace.horizon + 1 >= MIN_RATE_TRACE_LENGTH:
            empirical_rate = empirical_convergence_rate(trace, settings.tail_fraction)
        else:
            self.io.warn(
                f"Horizon {scenario.horizon} is too short for an empirical convergence rate."
            )

        detectors = [
            self.analyze_detector(scenario, detector, settings, error)
            for detector in scenario.detectors
        ]

        report = {
            "scenario": self.path,
            "scenario_hash": scenario.scenario_hash,
            "seed": scenario.seed,
            "beta": settings.beta,
            "p_max": settings.p_max,
            "attackers": list(attackers),
            "eigenvalues": validate_weight_matrix(scenario.weights, scenario.graph).eigenvalues,
            "consensus_error": finite_or_none(error),
            "expected_consensus_value": finite_or_none(float(np.mean(scenario.x0)) + error),
            "empirical_convergence_rate": empirical_rate,
            "privacy": [
                {"agent": verdict.agent, "private": verdict.private, "witness": verdict.witness}
                for verdict in privacy
            ],
            "detectors": detectors,
        }

        self.print_analysis(report)
        if out_dir:
            self.io.debug(FileProvider(out_dir).mkfile(ANALYSIS_JSON, to_json(report)))
        return report

    def analyze_detector(
        self, scenario: Scenario, detector: DetectorConfig, settings: AnalysisSettings, error: float
    ) -> dict:
        A = scenario.weights.A
        C = measurement_matrix(scenario.graph, detector.agent)
        sys = build_stacked_system(A, C, io=self.io)

        result = {
            "agent": detector.agent,
            "c": detector.c,
            "rho": detector.rho,
            "alpha_bound": false_alarm_bound(sys, detector.c, detector.rho, scenario.phi),
            "convergence_rate_bound": convergence_rate_bound(A, detector.rho),
        }

        if scenario.attack.p:
            verdict = detectability_check(A, C, scenario.attack.input_matrix(scenario.n))
            result["detectability"] = {
                "attackers": list(scenario.attack.attackers),
                "detectable": verdict.detectable,
                "rank_OJ": verdict.rank_OJ,
                "rank_J": verdict.rank_J,
                "observable": verdict.observable,
            }

        singleton = self.interval(A, C, detector, scenario.phi, settings.beta, 1)
        union = self.interval(A, C, detector, scenario.phi, settings.beta, settings.p_max)
        result["singleton_interval"] = interval_summary(singleton, error)
        result["union_interval"] = interval_summary(union, error)
        result["expected_mismatches"] = self.compare_expected(detector.agent, singleton, union)
        return result

    def interval(
        self, A, C, detector: DetectorConfig, phi: float, beta: float, p_max: int
    ) -> UnionErrorInterval:
        candidates = enumerate_detectable_attacker_sets(A, C, p_max, excluded=(detector.agent,))
        return union_error_interval(
            A, C, candidates, detector.c, detector.rho, phi, beta, io=self.io
        )

    def compare_expected(
        self, agent: int, singleton: UnionErrorInterval, union: UnionErrorInterval
    ) -> list[str]:
        expected = self.config.get("expected", {})
        mismatches = []
        for key, interval in (
            ("singleton_half_width", singleton),
            ("union_half_width", union),
        ):
            if key not in expected:
                continue
            mismatch = relative_mismatch(interval.half_width, expected[key])
            if mismatch > EXPECTED_VALUE_TOLERANCE:
                mismatches.append(
                    f"detector {agent}: {key} {interval.half_width:.4f} differs from the expected "
                    f"{expected[key]:.4f} by {mismatch:.2%}"
                )
        return mismatches

    def print_analysis(self, report: dict):
        if report["privacy"]:
            self.io.table(
                ["agent", "private", "witness"],
                [
                    (verdict["agent"], yes if verdict["private"] else no, verdict["witness"])
                    for verdict in report["privacy"]
                ],
                align_left="witness",
            )

        error = report["consensus_error"]
        rate = report["empirical_convergence_rate"]
        summary = "Consensus error e = " + ("non-summable" if error is None else f"{error:.4f}")
        if rate is not None:
            summary += f", empirical convergence rate {rate:.4f}"
        self.io.info(summary)

        for detector in report["detectors"]:
            self.io.info(
                f"Detector {detector['agent']}: alpha <= {detector['alpha_bound']:.6g}, "
                f"convergence rate <= {detector['convergence_rate_bound']:.4f}"
            )
            if "detectability" in detector:
                verdict = detector["detectability"]
                self.io.info(
                    f"  attackers {verdict['attackers']}: rank[O J] - rank[J] = "
                    f"{verdict['rank_OJ'] - verdict['rank_J']} "
                    f"({'detectable' if verdict['detectable'] else 'undetectable'})"
                )
            self.io.table(
                ["attackers", "mu_B", "z", "half width"],
                [
                    (
                        contribution["B"],
                        f"{contribution['mu']:.4f}",
                        f"{contribution['z']:.4f}",
                        f"{contribution['half_width']:.4f}",
                    )
                    for contribution in detector["union_interval"]["contributions"]
                ],
            )
            self.io.info(
                f"  singleton interval +/- {detector['singleton_interval']['half_width']:.4f}, "
                f"union interval +/- {detector['union_interval']['half_width']:.4f} "
                f"(beta = {report['beta']}, p_max = {report['p_max']})"
            )
            self.io.process_messages({"warnings": detector["expected_mismatches"]})

    def montecarlo(
        self,
        trials: int,
        workers: Optional[int] = None,
        seed: Optional[int] = None,
        horizon: Optional[int] = None,
        out_dir: Optional[str] = None,
    ) -> list[CampaignResult]:
        scenario = self.scenario(seed=seed, horizon=horizon)
        ScenarioValidator(io=self.io).run_validations(scenario)

        results = Campaign(scenario, workers=workers, io=self.io).run(trials)

        self.io.table(
            ["detector", "trials", "alarms", "empirical rate", "alpha bound", "within bound"],
            [
                (
                    result.agent,
                    result.trials,
                    result.alarms,
                    f"{result.empirical_rate:.6g}",
                    f"{result.alpha_bound:.6g}",
                    yes if result.within_bound else no,
                )
                for result in results
            ],
        )
        if out_dir:
            campaign = {
                "scenario": self.path,
                "scenario_hash": scenario.scenario_hash,
                "horizon": scenario.horizon,
                "results": [result.to_dict() for result in results],
            }
            self.io.debug(FileProvider(out_dir).mkfile(CAMPAIGN_JSON, to_json(campaign)))
        return results


def interval_summary(interval: UnionErrorInterval, error: float) -> dict:
    return {
        "half_width": interval.half_width,
        "widest": list(interval.widest.B),
        "contains_consensus_error": interval.contains(error) if math.isfinite(error) else None,
        "contributions": [
            {
                "B": list(contribution.B),
                "mu": contribution.mu,
                "z": contribution.z,
                "variance": contribution.variance,
                "half_width": contribution.half_width,
            }
            for contribution in interval.contributions
        ],
    }


def to_json(document: dict) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"
