from dataclasses import dataclass
from dataclasses import field
from itertools import combinations
from typing import Iterable
from typing import Optional

import numpy as np

from secure_consensus.constants import CONVERGED_IMMEDIATELY
from secure_consensus.constants import DEFAULT_TAIL_FRACTION
from secure_consensus.constants import MIN_RATE_TRACE_LENGTH
from secure_consensus.constants import RATE_FLOOR
from secure_consensus.consensus_exception import NumericalException
from secure_consensus.domain.detector import StackedSystem
from secure_consensus.domain.detector import ThresholdParameterException
from secure_consensus.domain.detector import UndetectableConfigurationException
from secure_consensus.domain.detector import build_stacked_system
from secure_consensus.domain.detector import stacked_matrices
from secure_consensus.domain.graph import Graph
from secure_consensus.domain.graph import closed_neighborhood
from secure_consensus.domain.sim import AttackProfile
from secure_consensus.domain.sim import Trace
from secure_consensus.domain.sim import attacker_matrix
from secure_consensus.providers.io import ClickIOProvider
from secure_consensus.providers.numerics import eigenvalues_symmetric
from secure_consensus.providers.numerics import gaussian_quantile
from secure_consensus.providers.numerics import rank
from secure_consensus.providers.validation import ValidationException


class AnalysisException(ValidationException):
    pass


class InsufficientRateDataException(NumericalException):
    pass


@dataclass(frozen=True)
class PrivacyVerdict:
    agent: int
    private: bool
    witness: str


@dataclass(frozen=True)
class DetectabilityVerdict:
    detectable: bool
    rank_OJ: int
    rank_J: int
    observability_rank: int
    n: int

    @property
    def difference(self) -> int:
        return self.rank_OJ - self.rank_J

    @property
    def observable(self) -> bool:
        return self.observability_rank == self.n


@dataclass(frozen=True)
class ErrorInterval:
    B: tuple
    mu: float
    z: float
    variance: float
    beta: float

    @property
    def half_width(self) -> float:
        return self.mu + self.z

    @property
    def interval(self) -> tuple:
        return (-self.half_width, self.half_width)

    def contains(self, e: float) -> bool:
        return -self.half_width <= e <= self.half_width


@dataclass(frozen=True)
class UnionErrorInterval:
    """Union of symmetric intervals: the widest contribution wins."""

    beta: float
    contributions: tuple = field(default_factory=tuple)

    @property
    def half_width(self) -> float:
        return max(contribution.half_width for contribution in self.contributions)

    @property
    def interval(self) -> tuple:
        return (-self.half_width, self.half_width)

    @property
    def widest(self) -> ErrorInterval:
        return max(self.contributions, key=lambda contribution: contribution.half_width)

    def contains(self, e: float) -> bool:
        return -self.half_width <= e <= self.half_width


def privacy_check(g: Graph, attackers: Iterable[int], j: int) -> PrivacyVerdict:
    attackers = set(attackers)
    if j in attackers:
        raise AnalysisException(f"Agent {j} is an attacker; privacy is only defined for benign agents.")

    cover = set()
    for attacker in attackers:
        cover |= closed_neighborhood(g, attacker)

    own = closed_neighborhood(g, j)
    uncovered = own - cover
    if uncovered:
        witness = f"N_{j} + {{{j}}} = {sorted(own)} is not covered; {sorted(uncovered)} unseen by attackers {sorted(attackers)}"
    else:
        witness = f"N_{j} + {{{j}}} = {sorted(own)} is contained in the attackers' closed neighbourhoods {sorted(cover)}"

    return PrivacyVerdict(agent=j, private=bool(uncovered), witness=witness)


def privacy_report(g: Graph, attackers: Iterable[int]) -> list[PrivacyVerdict]:
    attackers = set(attackers)
    return [privacy_check(g, attackers, j) for j in g.agents() if j not in attackers]


def detectability_check(A, C, B) -> DetectabilityVerdict:
    n = np.asarray(A).shape[0]
    O, _, J = stacked_matrices(A, C, B, depth=n - 1)

    rank_OJ = rank(np.hstack([O, J])).rank
    rank_J = rank(J).rank if J.size else 0

    return DetectabilityVerdict(
        detectable=rank_OJ - rank_J == n,
        rank_OJ=rank_OJ,
        rank_J=rank_J,
        observability_rank=rank(O).rank,
        n=n,
    )


def disagreement_operator(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    return A - np.ones((n, n)) / n


def convergence_rate_bound(A, rho: float) -> float:
    eigenvalues = eigenvalues_symmetric(A)
    if eigenvalues.size < 2:
        return float(rho)
    return float(max(rho, abs(eigenvalues[1]), abs(eigenvalues[-1])))


def empirical_convergence_rate(trace: Trace, tail_fraction: float = DEFAULT_TAIL_FRACTION) -> float:
    """
    Tail estimate of limsup ||x(k) - mean(x(k))||^(1/k).

    Steps whose disagreement falls under RATE_FLOOR * ||x(0)|| are dropped,
    a least-squares line is fitted to log-disagreement over the last
    ``tail_fraction`` of the remaining steps and its slope exponentiated.
    Returns CONVERGED_IMMEDIATELY when fewer than two steps rise above the floor.
    """
    x = np.asarray(trace.x if isinstance(trace, Trace) else trace, dtype=float)
    if x.shape[0] < MIN_RATE_TRACE_LENGTH:
        raise InsufficientRateDataException(
            f"A rate estimate needs at least {MIN_RATE_TRACE_LENGTH} steps, got {x.shape[0]}."
        )
    if not 0 < tail_fraction <= 1:
        raise InsufficientRateDataException(f"tail_fraction must lie in (0, 1], got {tail_fraction}.")

    disagreement = np.linalg.norm(x - x.mean(axis=1, keepdims=True), axis=1)
    floor = RATE_FLOOR * (np.linalg.norm(x[0]) or 1.0)

    usable = np.flatnonzero(disagreement >= floor)
    if usable.size < 2:
        return CONVERGED_IMMEDIATELY

    tail = usable[int(np.floor(usable.size * (1 - tail_fraction))) :]
    if tail.size < 2:
        raise InsufficientRateDataException(
            f"Only {tail.size} usable step(s) in the tail; cannot fit a decay rate."
        )

    slope, _ = np.polyfit(tail, np.log(disagreement[tail]), 1)
    return float(np.exp(slope))


def _check_interval_parameters(c: float, rho: float, phi: float, beta: float):
    if not 0 < beta < 1:
        raise AnalysisException(f"Confidence parameter beta must lie in (0, 1), got {beta}.")
    if c < 0:
        raise ThresholdParameterException(f"Threshold scale c must be non-negative, got {c}.")
    if not 0 < phi < rho < 1:
        raise ThresholdParameterException(
            f"Intervals require 0 < phi < rho < 1 (phi = {phi}, rho = {rho})."
        )


def error_interval(
    sys: StackedSystem, c: float, rho: float, phi: float, beta: float, B: tuple = ()
) -> ErrorInterval:
    _check_interval_parameters(c, rho, phi, beta)
    if not sys.detectable:
        raise UndetectableConfigurationException(float("nan"))

    n = sys.window
    q_row = sys.q_row
    mu = c / (n * (1 - rho)) * float(np.linalg.norm(q_row))
    variance = sum(
        phi ** (2 * (i - 1)) / n**2 * float(np.linalg.norm(q_row @ sys.partitions[i])) ** 2
        for i in range(1, n + 1)
    )
    z = gaussian_quantile(1 - beta / 2) * float(np.sqrt(variance))

    return ErrorInterval(B=tuple(B), mu=mu, z=z, variance=variance, beta=beta)


def enumerate_detectable_attacker_sets(
    A, C, p_max: int, excluded: Iterable[int] = ()
) -> list[tuple]:
    """
    Attacker sets of size 1..p_max meeting the detectability rank condition,
    ordered by size then lexicographically. Agents in ``excluded`` (the
    benign agent running the detector) never appear in a candidate.
    """
    n = np.asarray(A).shape[0]
    if not 1 <= p_max <= n:
        raise AnalysisException(f"p_max must lie in 1..{n}, got {p_max}.")

    excluded = set(excluded)
    agents = [agent for agent in range(1, n + 1) if agent not in excluded]
    return [
        B
        for size in range(1, p_max + 1)
        for B in combinations(agents, size)
        if detectability_check(A, C, attacker_matrix(n, B)).detectable
    ]


def union_error_interval(
    A,
    C,
    candidate_Bs: Iterable[tuple],
    c: float,
    rho: float,
    phi: float,
    beta: float,
    io: ClickIOProvider = ClickIOProvider(),
) -> UnionErrorInterval:
    n = np.asarray(A).shape[0]
    contributions = []
    for B in candidate_Bs:
        B = tuple(B)
        matrix = attacker_matrix(n, B)
        if not detectability_check(A, C, matrix).detectable:
            continue
        sys = build_stacked_system(A, C, matrix, io=io)
        if not sys.detectable:
            io.warn(f"Attacker set {list(B)} passes the rank test but Q_B could not be built; skipped.")
            continue
        contributions.append(error_interval(sys, c, rho, phi, beta, B=B))

    if not contributions:
        raise AnalysisException("No candidate attacker set meets the detectability condition.")

    return UnionErrorInterval(beta=beta, contributions=tuple(contributions))


def consensus_error(profile: AttackProfile, n: int) -> float:
    """e = (1/n) 1^T sum_k u(k); inf or nan for non-summable profiles."""
    if profile.p == 0:
        return 0.0
    return float(np.sum(profile.total()) / n)


def residual_sum_term(sys: StackedSystem, residual_rows: np.ndarray) -> Optional[float]:
    """s_B = (1/n) q_row sum_k r(k) over the recorded residuals."""
    if not sys.detectable:
        return None
    return float(sys.q_row @ np.sum(residual_rows, axis=0) / sys.window)
