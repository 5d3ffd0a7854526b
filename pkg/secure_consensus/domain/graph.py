from dataclasses import dataclass
from dataclasses import field
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from secure_consensus.constants import DEFAULT_RANDOM_WEIGHT_SCALE
from secure_consensus.constants import RANDOM_WEIGHT_ATTEMPTS
from secure_consensus.constants import SYMMETRIC_EIGEN_TOL
from secure_consensus.constants import WEIGHT_MATRIX_TOL
from secure_consensus.providers.numerics import as_matrix
from secure_consensus.providers.numerics import eigenvalues_symmetric
from secure_consensus.providers.validation import ValidationException


class GraphException(ValidationException):
    pass


class AgentOutOfRangeException(GraphException):
    def __init__(self, agent: int, n: int):
        super().__init__(f"Agent {agent} is out of range; agents are numbered 1..{n}.")


class SelfLoopException(GraphException):
    def __init__(self, agent: int):
        super().__init__(f"Edge ({agent}, {agent}) is a self-loop.")


class DisconnectedGraphException(GraphException):
    def __init__(self):
        super().__init__("The graph is not connected; average consensus requires a connected graph.")


class WeightMatrixDimensionException(GraphException):
    def __init__(self, shape: tuple, n: int):
        super().__init__(f"Weight matrix has shape {shape} but the graph has {n} agents.")


@dataclass(frozen=True)
class Graph:
    """Undirected graph over agents 1..n; edges are stored as (i, j) with i < j."""

    n: int
    edges: frozenset
    connected: bool

    def adjacency(self) -> np.ndarray:
        adjacency = np.zeros((self.n, self.n))
        for i, j in self.edges:
            adjacency[i - 1, j - 1] = adjacency[j - 1, i - 1] = 1.0
        return adjacency

    def degree(self, agent: int) -> int:
        return len(neighborhood(self, agent))

    def agents(self) -> range:
        return range(1, self.n + 1)


@dataclass(frozen=True)
class WeightMatrix:
    A: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class ValidationReport:
    symmetric: bool
    row_stochastic: bool
    sparsity_matches_graph: bool
    spectrum_ok: bool
    eigenvalues: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(
            [self.symmetric, self.row_stochastic, self.sparsity_matches_graph, self.spectrum_ok]
        )

    def failures(self) -> list:
        failures = []
        if not self.symmetric:
            failures.append("weight matrix is not symmetric (A = A^T)")
        if not self.row_stochastic:
            failures.append("rows of the weight matrix do not sum to 1 (assumption A2)")
        if not self.sparsity_matches_graph:
            failures.append("weight matrix has non-zero entries outside the graph's edges")
        if not self.spectrum_ok:
            failures.append("eigenvalues violate lambda_1 = 1 and |lambda_i| < 1 (assumption A1)")
        return failures


def _check_agent(agent: int, n: int):
    if not 1 <= agent <= n:
        raise AgentOutOfRangeException(agent, n)


def build_graph(n: int, edges: Iterable) -> Graph:
    if n < 1:
        raise GraphException(f"A graph needs at least one agent, got n={n}.")

    normalised = set()
    for i, j in edges:
        _check_agent(i, n)
        _check_agent(j, n)
        if i == j:
            raise SelfLoopException(i)
        normalised.add((min(i, j), max(i, j)))

    rows = [i - 1 for i, _ in normalised]
    cols = [j - 1 for _, j in normalised]
    components, _ = connected_components(
        csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)), directed=False
    )

    return Graph(n=n, edges=frozenset(normalised), connected=components == 1)


def neighborhood(g: Graph, i: int) -> frozenset:
    _check_agent(i, g.n)
    return frozenset(b if a == i else a for a, b in g.edges if i in (a, b))


def closed_neighborhood(g: Graph, i: int) -> frozenset:
    return neighborhood(g, i) | {i}


def metropolis_weights(g: Graph) -> WeightMatrix:
    if not g.connected:
        raise DisconnectedGraphException()

    A = np.zeros((g.n, g.n))
    for i, j in g.edges:
        A[i - 1, j - 1] = A[j - 1, i - 1] = 1.0 / (1.0 + max(g.degree(i), g.degree(j)))
    A[np.diag_indices(g.n)] = 1.0 - A.sum(axis=1)

    return WeightMatrix(A)


def random_weights(
    g: Graph, seed: int, scale: float = DEFAULT_RANDOM_WEIGHT_SCALE
) -> WeightMatrix:
    """
    Metropolis weights perturbed by a seeded symmetric, zero-row-sum
    perturbation supported on the graph's edges.

    Each edge weight moves by ``scale * a_ij * U(-1, 1)`` and both end
    points absorb the change on their diagonal. Candidates that lose an
    edge or break (A1) are redrawn.
    """
    base = metropolis_weights(g).A
    rng = np.random.default_rng(seed)

    for _ in range(RANDOM_WEIGHT_ATTEMPTS):
        A = base.copy()
        for i, j in sorted(g.edges):
            delta = scale * base[i - 1, j - 1] * rng.uniform(-1.0, 1.0)
            A[i - 1, j - 1] += delta
            A[j - 1, i - 1] += delta
            A[i - 1, i - 1] -= delta
            A[j - 1, j - 1] -= delta

        edge_weights_positive = all(A[i - 1, j - 1] > 0 for i, j in g.edges)
        if edge_weights_positive and validate_weight_matrix(WeightMatrix(A), g).passed:
            return WeightMatrix(A)

    raise GraphException(
        f"Could not draw a random weight matrix satisfying (A1) after {RANDOM_WEIGHT_ATTEMPTS} attempts."
    )


def validate_weight_matrix(weights: WeightMatrix, g: Graph) -> ValidationReport:
    A = as_matrix(weights.A, "weight matrix")
    if A.shape != (g.n, g.n):
        raise WeightMatrixDimensionException(A.shape, g.n)

    scale = max(np.linalg.norm(A, 2), 1.0)
    tolerance = WEIGHT_MATRIX_TOL * scale

    symmetric = bool(np.max(np.abs(A - A.T)) <= tolerance)
    row_stochastic = bool(np.max(np.abs(A.sum(axis=1) - 1.0)) <= tolerance)

    allowed = g.adjacency() + np.eye(g.n)
    sparsity_matches_graph = bool(np.all(np.abs(A[allowed == 0]) <= tolerance))

    if symmetric:
        eigenvalues = eigenvalues_symmetric(A, tol=SYMMETRIC_EIGEN_TOL)
        spectrum_ok = bool(
            abs(eigenvalues[0] - 1.0) <= SYMMETRIC_EIGEN_TOL
            and np.all(np.abs(eigenvalues[1:]) < 1.0 - SYMMETRIC_EIGEN_TOL)
        )
    else:
        # A non-symmetric A is already invalid; report the real parts for diagnosis
        spectrum = np.linalg.eigvals(A)
        eigenvalues = np.sort(spectrum.real)[::-1]
        spectrum_ok = False

    return ValidationReport(
        symmetric=symmetric,
        row_stochastic=row_stochastic,
        sparsity_matches_graph=sparsity_matches_graph,
        spectrum_ok=spectrum_ok,
        eigenvalues=[float(value) for value in eigenvalues],
    )
