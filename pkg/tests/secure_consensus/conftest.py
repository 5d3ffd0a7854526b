import json
from pathlib import Path

import numpy as np
import pytest

from secure_consensus.domain.analysis import detectability_check
from secure_consensus.domain.detector import build_stacked_system
from secure_consensus.domain.experiment import scenario_from_config
from secure_consensus.domain.graph import WeightMatrix
from secure_consensus.domain.graph import build_graph
from secure_consensus.domain.graph import random_weights
from secure_consensus.domain.sim import attacker_matrix
from secure_consensus.domain.sim import measurement_matrix

BASE_DIR = Path(__file__).parent.parent.parent
SCENARIOS_DIR = BASE_DIR / "scenarios"
RING_SCENARIO = SCENARIOS_DIR / "paper_sec5.json"
ALARM_SCENARIO = SCENARIOS_DIR / "alarm_demo.json"

RING_EDGES = [(1, 2), (1, 4), (2, 3), (3, 4)]
RING_WEIGHTS = np.array(
    [
        [0.136, 0.461, 0.0, 0.403],
        [0.461, 0.153, 0.386, 0.0],
        [0.0, 0.386, 0.278, 0.336],
        [0.403, 0.0, 0.336, 0.261],
    ]
)

# ||Q|| * ||P J|| above this is too ill-conditioned for 1e-8 reconstruction checks
RECONSTRUCTION_CONDITION_LIMIT = 1e5


@pytest.fixture
def ring_graph():
    return build_graph(4, RING_EDGES)


@pytest.fixture
def ring_weights():
    return WeightMatrix(RING_WEIGHTS.copy())


@pytest.fixture
def ring_C(ring_graph):
    return measurement_matrix(ring_graph, 1)


@pytest.fixture
def ring_config():
    return json.loads(RING_SCENARIO.read_text())


@pytest.fixture
def ring_scenario(ring_config):
    return scenario_from_config(ring_config)


def write_scenario(directory: Path, config: dict, name: str = "scenario.json") -> str:
    path = directory / name
    path.write_text(json.dumps(config))
    return str(path)


def random_connected_graph(rng: np.random.Generator, n: int):
    edges = {(int(rng.integers(1, k)), k) for k in range(2, n + 1)}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < 0.3:
                edges.add((i, j))
    return build_graph(n, edges)


def random_detectable_systems(count: int, seed: int = 0) -> list[dict]:
    """Seeded random (graph, A, detector, attacker) draws with n in 3..6 that
    pass the rank test and are well conditioned."""
    rng = np.random.default_rng(seed)
    systems = []
    for _ in range(5000):
        n = int(rng.integers(3, 7))
        graph = random_connected_graph(rng, n)
        weights = random_weights(graph, int(rng.integers(0, 2**31)))
        detector = int(rng.integers(1, n + 1))
        attacker = int(rng.choice([agent for agent in graph.agents() if agent != detector]))

        C = measurement_matrix(graph, detector)
        B = attacker_matrix(n, (attacker,))
        if not detectability_check(weights.A, C, B).detectable:
            continue
        sys = build_stacked_system(weights.A, C, B)
        if not sys.detectable:
            continue
        condition = np.linalg.norm(sys.Q, 2) * np.linalg.norm(sys.P @ sys.J, 2)
        if condition > RECONSTRUCTION_CONDITION_LIMIT:
            continue

        systems.append(
            {
                "graph": graph,
                "weights": weights,
                "detector": detector,
                "attacker": attacker,
                "C": C,
                "B": B,
                "sys": sys,
            }
        )
        if len(systems) == count:
            return systems

    raise RuntimeError(f"Only found {len(systems)} detectable systems")


@pytest.fixture(scope="session")
def detectable_systems():
    return random_detectable_systems(50)
