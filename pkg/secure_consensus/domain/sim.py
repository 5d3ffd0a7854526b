import csv
import math
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from io import StringIO
from typing import Optional
from typing import Union

import numpy as np

from secure_consensus.constants import FLOAT_FORMAT
from secure_consensus.consensus_exception import ConsensusException
from secure_consensus.domain.graph import AgentOutOfRangeException
from secure_consensus.domain.graph import Graph
from secure_consensus.domain.graph import WeightMatrix
from secure_consensus.domain.graph import neighborhood
from secure_consensus.domain.scenario_validator import ScenarioValidator
from secure_consensus.providers.io import ClickIOProvider
from secure_consensus.providers.validation import ValidationException


class SimulationException(ConsensusException):
    exit_code = 3


class NoiseOrderException(SimulationException):
    def __init__(self, expected: int, requested: int):
        super().__init__(
            f"Noise steps must be queried in order: expected step {expected}, got {requested}."
        )


class AttackProfileException(ValidationException):
    pass


class DimensionMismatchException(SimulationException):
    pass


def substream(seed: int, trial: int = 0) -> np.random.Generator:
    """
    Independent PCG64 stream for a (seed, trial) pair.

    Normal variates come from numpy's ziggurat sampler
    (``Generator.standard_normal``), so a stream is reproducible across
    platforms for a fixed numpy major version.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


class NoiseProcess:
    """
    Telescoping privacy noise: w(0) = v(0), w(k) = phi^k v(k) - phi^(k-1) v(k-1).

    ``zero_noise`` gives the variance-0 mode (v = 0), and agents listed in
    ``excluded_agents`` (1-indexed) never perturb their shared state.
    """

    def __init__(
        self,
        phi: float,
        n: int,
        seed: int,
        trial: int = 0,
        zero_noise: bool = False,
        excluded_agents: tuple = (),
    ):
        if not 0.0 < phi < 1.0:
            raise ValidationException(f"Noise decay phi must satisfy 0 < phi < 1, got {phi}.")
        self.phi = phi
        self.n = n
        self.seed = seed
        self.trial = trial
        self.zero_noise = zero_noise
        self.rng = substream(seed, trial)
        self.v_prev: Optional[np.ndarray] = None
        self.next_step = 0

        self.mask = np.ones(n)
        for agent in excluded_agents:
            self.mask[agent - 1] = 0.0

    def draw(self) -> np.ndarray:
        v = self.rng.standard_normal(self.n)
        if self.zero_noise:
            return np.zeros(self.n)
        return v * self.mask

    def step(self, k: int) -> np.ndarray:
        if k != self.next_step:
            raise NoiseOrderException(self.next_step, k)

        v = self.draw()
        if k == 0:
            w = v.copy()
        else:
            w = self.phi**k * v - self.phi ** (k - 1) * self.v_prev

        self.v_prev = v
        self.next_step += 1
        return w


def noise_step(proc: NoiseProcess, k: int) -> np.ndarray:
    return proc.step(k)


@dataclass(frozen=True)
class ZeroSignal:
    def value(self, k: int) -> float:
        return 0.0

    def total(self) -> float:
        return 0.0

    @property
    def summable(self) -> bool:
        return True


@dataclass(frozen=True)
class ConstantSignal:
    a: float

    def value(self, k: int) -> float:
        return self.a

    def total(self) -> float:
        return 0.0 if self.a == 0 else math.copysign(math.inf, self.a)

    @property
    def summable(self) -> bool:
        return self.a == 0


@dataclass(frozen=True)
class GeometricSignal:
    """a * gamma^k"""

    a: float
    gamma: float

    def value(self, k: int) -> float:
        return self.a * self.gamma**k

    def total(self) -> float:
        if self.summable:
            return self.a / (1.0 - self.gamma)
        return math.nan

    @property
    def summable(self) -> bool:
        return self.a == 0 or abs(self.gamma) < 1


@dataclass(frozen=True)
class SequenceSignal:
    """Explicit finite sequence u(0), u(1), ... followed by zeros."""

    values: tuple

    def value(self, k: int) -> float:
        return self.values[k] if k < len(self.values) else 0.0

    def total(self) -> float:
        return float(sum(self.values))

    @property
    def summable(self) -> bool:
        return True


Signal = Union[ZeroSignal, ConstantSignal, GeometricSignal, SequenceSignal]


def attacker_matrix(n: int, attackers: tuple) -> np.ndarray:
    """B = [e_i1, ..., e_ip]"""
    B = np.zeros((n, len(attackers)))
    for column, agent in enumerate(attackers):
        if not 1 <= agent <= n:
            raise AgentOutOfRangeException(agent, n)
        B[agent - 1, column] = 1.0
    return B


@dataclass(frozen=True)
class AttackProfile:
    attackers: tuple = ()
    signals: tuple = ()

    def __post_init__(self):
        if len(set(self.attackers)) != len(self.attackers):
            raise AttackProfileException(f"Attacker indices must be distinct: {self.attackers}.")
        if len(self.attackers) != len(self.signals):
            raise AttackProfileException(
                f"Got {len(self.signals)} signals for {len(self.attackers)} attackers."
            )

    @property
    def p(self) -> int:
        return len(self.attackers)

    @property
    def summable(self) -> bool:
        return all(signal.summable for signal in self.signals)

    def input_matrix(self, n: int) -> np.ndarray:
        return attacker_matrix(n, self.attackers)

    def total(self) -> np.ndarray:
        return np.array([signal.total() for signal in self.signals], dtype=float)

    def silenced(self) -> "AttackProfile":
        return replace(self, signals=tuple(ZeroSignal() for _ in self.signals))


def attack_signal(profile: AttackProfile, k: int) -> np.ndarray:
    return np.array([signal.value(k) for signal in profile.signals], dtype=float)


@dataclass(frozen=True)
class DetectorConfig:
    agent: int
    c: float
    rho: float


@dataclass(frozen=True)
class Scenario:
    graph: Graph
    weights: WeightMatrix
    x0: np.ndarray
    phi: float
    seed: int
    attack: AttackProfile = field(default_factory=AttackProfile)
    detectors: tuple = ()
    horizon: int = 0
    zero_noise: bool = False
    attackers_add_noise: bool = True
    scenario_hash: str = ""

    @property
    def n(self) -> int:
        return self.graph.n


def measurement_matrix(g: Graph, i: int) -> np.ndarray:
    """Rows select agent i first, then its neighbours in ascending order."""
    observed = [i] + sorted(neighborhood(g, i))
    C = np.zeros((len(observed), g.n))
    for row, agent in enumerate(observed):
        C[row, agent - 1] = 1.0
    return C


def step(x: np.ndarray, A: np.ndarray, w: np.ndarray, B: np.ndarray, u: np.ndarray) -> np.ndarray:
    if A.shape != (x.size, x.size) or w.shape != x.shape or B.shape != (x.size, u.size):
        raise DimensionMismatchException(
            f"Inconsistent dimensions: x {x.shape}, A {A.shape}, w {w.shape}, B {B.shape}, u {u.shape}."
        )
    return A @ (x + w) + B @ u


@dataclass
class Trace:
    x: np.ndarray
    w: np.ndarray
    v: np.ndarray
    u: np.ndarray
    attackers: tuple
    measurements: dict
    measurement_matrices: dict
    seed: int
    trial: int
    scenario_hash: str

    @property
    def horizon(self) -> int:
        return self.x.shape[0] - 1

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def u_dense(self) -> np.ndarray:
        dense = np.zeros_like(self.x)
        for column, agent in enumerate(self.attackers):
            dense[:, agent - 1] = self.u[:, column]
        return dense

    def verify(self, A: np.ndarray) -> float:
        """Largest violation of the update and measurement equations on the recorded data."""
        dense = self.u_dense()
        discrepancy = 0.0
        if self.horizon > 0:
            predicted = (self.x[:-1] + self.w[:-1]) @ A.T + dense[:-1]
            discrepancy = float(np.max(np.abs(predicted - self.x[1:])))

        shared = self.x + self.w
        for agent, y in self.measurements.items():
            C = self.measurement_matrices[agent]
            discrepancy = max(discrepancy, float(np.max(np.abs(shared @ C.T - y))))

        return discrepancy

    def to_csv(self) -> str:
        agents = sorted(self.measurements)
        buffer = StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(
            ["step", "agent", "x", "w", "u"] + [f"y_detector_{agent}" for agent in agents]
        )

        dense = self.u_dense()
        observed = {
            agent: list(np.argmax(self.measurement_matrices[agent], axis=1)) for agent in agents
        }
        for k in range(self.horizon + 1):
            for index in range(self.n):
                row = [k, index + 1] + [
                    FLOAT_FORMAT.format(value)
                    for value in (self.x[k, index], self.w[k, index], dense[k, index])
                ]
                for agent in agents:
                    if index in observed[agent]:
                        position = observed[agent].index(index)
                        row.append(FLOAT_FORMAT.format(self.measurements[agent][k, position]))
                    else:
                        row.append("")
                writer.writerow(row)

        return buffer.getvalue()


def run(
    scenario: Scenario,
    trial: int = 0,
    zero_noise: Optional[bool] = None,
    attack: Optional[AttackProfile] = None,
    io: ClickIOProvider = ClickIOProvider(),
) -> Trace:
    ScenarioValidator.for_simulation(io=io).run_validations(scenario)

    attack = attack if attack is not None else scenario.attack
    zero_noise = scenario.zero_noise if zero_noise is None else zero_noise

    n, K = scenario.n, scenario.horizon
    A = scenario.weights.A
    B = attack.input_matrix(n)
    noise = NoiseProcess(
        scenario.phi,
        n,
        scenario.seed,
        trial=trial,
        zero_noise=zero_noise,
        excluded_agents=() if scenario.attackers_add_noise else attack.attackers,
    )
    matrices = {d.agent: measurement_matrix(scenario.graph, d.agent) for d in scenario.detectors}

    x = np.zeros((K + 1, n))
    w = np.zeros((K + 1, n))
    v = np.zeros((K + 1, n))
    u = np.zeros((K + 1, attack.p))

    x[0] = scenario.x0
    for k in range(K + 1):
        w[k] = noise.step(k)
        v[k] = noise.v_prev
        u[k] = attack_signal(attack, k)
        if k < K:
            x[k + 1] = step(x[k], A, w[k], B, u[k])

    shared = x + w
    measurements = {agent: shared @ C.T for agent, C in matrices.items()}

    return Trace(
        x=x,
        w=w,
        v=v,
        u=u,
        attackers=attack.attackers,
        measurements=measurements,
        measurement_matrices=matrices,
        seed=scenario.seed,
        trial=trial,
        scenario_hash=scenario.scenario_hash,
    )


def zero_noise_replay(scenario: Scenario, io: ClickIOProvider = ClickIOProvider()) -> Trace:
    return run(scenario, zero_noise=True, io=io)
