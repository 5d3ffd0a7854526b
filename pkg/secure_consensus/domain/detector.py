import csv
from dataclasses import dataclass
from io import StringIO
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from secure_consensus.constants import FLOAT_FORMAT
from secure_consensus.constants import RECONSTRUCTION_TOL
from secure_consensus.providers.io import ClickIOProvider
from secure_consensus.providers.numerics import as_matrix
from secure_consensus.providers.numerics import pinv
from secure_consensus.providers.numerics import rank
from secure_consensus.providers.validation import ValidationException


class DetectorException(ValidationException):
    pass


class StackDimensionException(DetectorException):
    pass


class WindowLengthException(DetectorException):
    def __init__(self, expected: int, got: int):
        super().__init__(f"Expected a stacked window of {expected} entries, got {got}.")


class UndetectableConfigurationException(DetectorException):
    def __init__(self, residual: float):
        super().__init__(
            "Undetectable configuration: rank[O_(n-1) J_(n-1)] - rank[J_(n-1)] = n does not hold, "
            f"so no Q with Q P J = [I_p | 0] exists (residual {residual:.3e})."
        )


class ThresholdParameterException(DetectorException):
    pass


@dataclass(frozen=True)
class StackedSystem:
    """
    Stacked response over n+1 steps for one benign agent:
    Y[k, k+n] = O x(k) + H W[k, k+n] + J U[k, k+n].

    ``partitions`` are the n-column blocks P_0..P_n of P H. ``Q`` and
    ``q_row`` are only set when an attacker matrix was given and the
    configuration is detectable.
    """

    window: int
    m: int
    p: int
    O: np.ndarray
    H: np.ndarray
    J: np.ndarray
    P: np.ndarray
    partitions: tuple
    Q: Optional[np.ndarray] = None
    q_row: Optional[np.ndarray] = None

    @property
    def rows(self) -> int:
        return self.m * (self.window + 1)

    @property
    def degenerate(self) -> bool:
        return not np.any(np.abs(self.P) > 0)

    @property
    def detectable(self) -> bool:
        return self.Q is not None


@dataclass
class DetectionReport:
    agent: int
    residual_norms: np.ndarray
    thresholds: np.ndarray
    alarms: np.ndarray
    alpha_bound: float
    residual_sum: Optional[float] = None

    @property
    def evaluable_steps(self) -> int:
        return int(self.residual_norms.size)

    @property
    def first_alarm(self) -> Optional[int]:
        raised = np.flatnonzero(self.alarms)
        return int(raised[0]) if raised.size else None

    def summary(self) -> dict:
        return {
            "agent": self.agent,
            "first_alarm": self.first_alarm,
            "alpha_bound": self.alpha_bound,
            "evaluable_steps": self.evaluable_steps,
            "residual_sum_term": self.residual_sum,
        }

    def to_csv(self) -> str:
        buffer = StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["step", "residual_norm", "threshold", "alarm"])
        for k, (norm, threshold, raised) in enumerate(
            zip(self.residual_norms, self.thresholds, self.alarms)
        ):
            writer.writerow(
                [k, FLOAT_FORMAT.format(norm), FLOAT_FORMAT.format(threshold), int(raised)]
            )
        return buffer.getvalue()


def stacked_matrices(A, C, B=None, depth: int = 1) -> tuple:
    A = as_matrix(A, "weight matrix")
    C = as_matrix(C, "measurement matrix")
    n = A.shape[0]
    B = np.zeros((n, 0)) if B is None else np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(n, -1)
    m, p = C.shape[0], B.shape[1]

    if A.shape != (n, n) or C.shape[1] != n or B.shape[0] != n:
        raise StackDimensionException(
            f"Inconsistent dimensions: A {A.shape}, C {C.shape}, B {B.shape}."
        )
    if depth < 0:
        raise StackDimensionException(f"Stacking depth must be non-negative, got {depth}.")

    # CA^i for i = 0..depth
    blocks = [C]
    for _ in range(depth):
        blocks.append(blocks[-1] @ A)

    O = np.vstack(blocks)
    H = np.zeros((m * (depth + 1), n * (depth + 1)))
    J = np.zeros((m * (depth + 1), p * (depth + 1)))
    for i in range(depth + 1):
        for j in range(i + 1):
            H[i * m : (i + 1) * m, j * n : (j + 1) * n] = blocks[i - j]
            if j < i:
                J[i * m : (i + 1) * m, j * p : (j + 1) * p] = blocks[i - j - 1] @ B

    return O, H, J


def projector(O, io: ClickIOProvider = ClickIOProvider()) -> np.ndarray:
    O = as_matrix(O, "observability stack")
    P = np.eye(O.shape[0]) - O @ pinv(O)
    P = (P + P.T) / 2

    if rank(O).rank == O.shape[0]:
        io.warn(
            "Degenerate detector: the observability stack has full row rank, so the projector "
            "is zero and every residual vanishes."
        )
        P = np.zeros_like(P)

    return P


def input_reconstructor(P, J, p: int) -> tuple:
    """
    Minimum-norm solutions of Q P J = [I_p | 0] and q P J = [1_p^T | 0].

    Both come from the same pseudoinverse, so q_row = 1^T Q.
    """
    PJ = np.asarray(P) @ np.asarray(J)
    target = np.zeros((p, PJ.shape[1]))
    target[:, :p] = np.eye(p)

    Q = pinv(PJ)[:p]
    residual = float(np.max(np.abs(Q @ PJ - target))) if p else 0.0
    if p == 0 or residual > RECONSTRUCTION_TOL:
        raise UndetectableConfigurationException(residual)

    return Q, Q.sum(axis=0)


def build_stacked_system(
    A, C, B=None, io: ClickIOProvider = ClickIOProvider()
) -> StackedSystem:
    n = np.asarray(A).shape[0]
    O, H, J = stacked_matrices(A, C, B, depth=n)
    P = projector(O, io=io)
    PH = P @ H
    m = O.shape[0] // (n + 1)
    p = J.shape[1] // (n + 1)

    Q = q_row = None
    if p:
        try:
            Q, q_row = input_reconstructor(P, J, p)
        except UndetectableConfigurationException:
            pass

    return StackedSystem(
        window=n,
        m=m,
        p=p,
        O=O,
        H=H,
        J=J,
        P=P,
        partitions=tuple(PH[:, i * n : (i + 1) * n] for i in range(n + 1)),
        Q=Q,
        q_row=q_row,
    )


def stack_windows(series: np.ndarray, depth: int) -> np.ndarray:
    """Rows are the stacked vectors [s(k); s(k+1); ...; s(k+depth)] for k = 0..K-depth."""
    series = np.asarray(series, dtype=float)
    if series.shape[1] == 0:
        return np.zeros((max(series.shape[0] - depth, 0), 0))
    if series.shape[0] < depth + 1:
        return np.zeros((0, series.shape[1] * (depth + 1)))
    windows = sliding_window_view(series, (depth + 1, series.shape[1]))
    return windows.reshape(windows.shape[0], -1)


def residual(sys: StackedSystem, Y_window: np.ndarray) -> np.ndarray:
    Y_window = np.ravel(Y_window)
    if Y_window.size != sys.rows:
        raise WindowLengthException(sys.rows, Y_window.size)
    return sys.P @ Y_window


def residuals(sys: StackedSystem, measurements: np.ndarray) -> np.ndarray:
    """r(k) for every evaluable step k <= K - n, one per row."""
    return stack_windows(measurements, sys.window) @ sys.P.T


def attack_residuals(sys: StackedSystem, inputs: np.ndarray) -> np.ndarray:
    """r^a(k) = P J U[k, k+n], one per row."""
    return stack_windows(inputs, sys.window) @ (sys.P @ sys.J).T


def alarm(r_norm: float, c: float, rho: float, k: int) -> bool:
    return bool(r_norm > c * rho**k)


def false_alarm_bound(sys: StackedSystem, c: float, rho: float, phi: float) -> float:
    if not c > 0:
        raise ThresholdParameterException(f"Threshold scale c must be positive, got {c}.")
    if not 0 < phi < rho < 1:
        raise ThresholdParameterException(
            f"The false alarm bound requires 0 < phi < rho < 1 (phi = {phi}, rho = {rho})."
        )

    blocks = sys.partitions
    total = sum(
        phi ** (2 * i) * np.sum((blocks[i] - blocks[i + 1]) ** 2) for i in range(sys.window)
    )
    total += phi ** (2 * sys.window) * np.sum(blocks[-1] ** 2)

    return float(total * rho**2 / (c**2 * (rho**2 - phi**2)))


def reconstruct_input(sys: StackedSystem, r_a: np.ndarray) -> np.ndarray:
    if not sys.detectable:
        raise UndetectableConfigurationException(float("nan"))
    r_a = np.ravel(r_a)
    if r_a.size != sys.rows:
        raise WindowLengthException(sys.rows, r_a.size)
    return sys.Q @ r_a


def detect(
    agent: int, measurements: np.ndarray, sys: StackedSystem, c: float, rho: float, phi: float
) -> DetectionReport:
    norms = np.linalg.norm(residuals(sys, measurements), axis=1)
    thresholds = c * rho ** np.arange(norms.size)

    return DetectionReport(
        agent=agent,
        residual_norms=norms,
        thresholds=thresholds,
        alarms=norms > thresholds,
        alpha_bound=false_alarm_bound(sys, c, rho, phi),
    )
