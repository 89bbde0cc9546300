"""Optimal gain and phase under per-sensor power budgets.

The ratio-of-quadratics problem is homogenized with an auxiliary scalar t
(a_tilde = t a), lifted to abar = [a_tilde; t], relaxed to an SDP over
Abar = abar abar^H with the rank constraint dropped, and solved with the
interior-point method in ``solvers.sdp``. The leading N x N block of the
optimal Abar is rank one, and its dominant eigenpair divided by
sqrt(Abar_{N+1,N+1}) is the optimal gain.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..model.system import (
    ConstraintKind,
    GainVector,
    SensorNetwork,
    build_D,
    check_lengths,
)
from ..solvers import sdp
from ..solvers.sdp import SdpProblem, SdpSolution

logger = logging.getLogger(__name__)

RANK_RATIO_THRESHOLD = 1e-6
# IPM round-off allowance on a recovered budget before it is rescaled onto the feasible set
BUDGET_ROUNDOFF = 1e-6


class SdpSolveError(RuntimeError):
    """The relaxation did not reach an optimal status."""

    def __init__(self, solution: SdpSolution):
        super().__init__(
            f"SDP relaxation ended with status {solution.status.value} "
            f"after {solution.iterations} iterations"
        )
        self.solution = solution


class NonPositiveCornerError(ValueError):
    """The corner entry of the SDP solution is not positive, so no gain can be recovered."""


class RankRecoveryFailure(RuntimeError):
    """The leading block of the SDP solution is not numerically rank one."""

    def __init__(self, first: float, second: float, solution: SdpSolution):
        super().__init__(
            f"leading block is not rank one: eigenvalues {first:.6e} and {second:.6e} "
            f"(ratio {second / first if first > 0 else math.inf:.3e})"
        )
        self.first = first
        self.second = second
        self.solution = solution


@dataclass(eq=False)
class LiftedInstance:
    """Homogenized and lifted data for one channel draw."""

    h: np.ndarray
    hvh_diag: np.ndarray
    sigma_w2: float
    d_diag: np.ndarray
    p_max_i: np.ndarray
    h_bar: np.ndarray
    c_bar: np.ndarray
    d_bars: list[np.ndarray]

    @property
    def n_sensors(self) -> int:
        return int(self.h.size)

    @property
    def d_blocks(self) -> list[np.ndarray]:
        """The single-entry diagonal matrices D_i."""
        blocks = []
        for i, d in enumerate(self.d_diag):
            block = np.zeros((self.n_sensors, self.n_sensors))
            block[i, i] = d
            blocks.append(block)
        return blocks

    def to_sdp(self) -> SdpProblem:
        return SdpProblem(objective=self.h_bar, eq_lhs=self.c_bar, ineq=list(self.d_bars))


def lift(
    h: np.ndarray,
    network: SensorNetwork,
    sigma_theta2: float,
    p_max_i: np.ndarray | float,
) -> LiftedInstance:
    """Assemble Hbar = blkdiag(h h^H, 0), Cbar = blkdiag(H V H^H, sigma_w^2), Dbar_i = blkdiag(D_i, -P_max,i)."""
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    n = h.size
    p_max_i = np.broadcast_to(np.asarray(p_max_i, dtype=float), (n,)).copy()
    check_lengths(h, network.sigma_v2)
    if np.any(p_max_i <= 0):
        raise ValueError("every per-sensor power budget must be positive")

    hvh_diag = np.abs(h) ** 2 * network.sigma_v2
    d_diag = build_D(network, sigma_theta2)

    h_bar = np.zeros((n + 1, n + 1), dtype=complex)
    h_bar[:n, :n] = np.outer(h, h.conj())
    c_bar = np.diag(np.append(hvh_diag, network.sigma_w2)).astype(complex)
    d_bars = []
    for i in range(n):
        d_bar = np.zeros((n + 1, n + 1), dtype=complex)
        d_bar[i, i] = d_diag[i]
        d_bar[n, n] = -p_max_i[i]
        d_bars.append(d_bar)

    return LiftedInstance(
        h=h,
        hvh_diag=hvh_diag,
        sigma_w2=network.sigma_w2,
        d_diag=d_diag,
        p_max_i=p_max_i,
        h_bar=h_bar,
        c_bar=c_bar,
        d_bars=d_bars,
    )


def lifted_point(a: GainVector, inst: LiftedInstance) -> np.ndarray:
    """abar = [t a; t] with t = 1 / sqrt(a^H H V H^H a + sigma_w^2)."""
    check_lengths(a.a, inst.h)
    t = 1.0 / math.sqrt(float(np.sum(np.abs(a.a) ** 2 * inst.hvh_diag)) + inst.sigma_w2)
    return np.append(t * a.a, t)


def snr(a: GainVector, inst: LiftedInstance) -> float:
    signal = abs(np.vdot(a.a, inst.h)) ** 2
    return float(signal / (float(np.sum(np.abs(a.a) ** 2 * inst.hvh_diag)) + inst.sigma_w2))


def feasibility_report(a: GainVector, inst: LiftedInstance) -> np.ndarray:
    """Per-sensor slack P_max,i - |a_i|^2 (sigma_theta^2 + sigma_v,i^2)."""
    check_lengths(a.a, inst.p_max_i)
    return inst.p_max_i - a.powers(inst.d_diag)


def relaxation_bound(sol: SdpSolution) -> float:
    """The SDP value, an upper bound on the SNR of any individually feasible gain."""
    return sol.objective_value


def recover_gain(a_matrix: np.ndarray, inst: LiftedInstance) -> tuple[np.ndarray, float, float]:
    """Rank-one factor of the leading block scaled by 1/sqrt(corner).

    Returns the raw gain together with the two largest eigenvalues of the
    leading block.
    """
    n = inst.n_sensors
    leading = (a_matrix[:n, :n] + a_matrix[:n, :n].conj().T) / 2
    eigenvalues, eigenvectors = scipy.linalg.eigh(leading)
    first = float(eigenvalues[-1])
    second = float(eigenvalues[-2]) if n > 1 else 0.0
    corner = float(a_matrix[n, n].real)
    if corner <= 0:
        raise NonPositiveCornerError(
            f"corner entry of the SDP solution must be positive, got {corner}"
        )
    a = math.sqrt(max(first, 0.0)) * eigenvectors[:, -1] / math.sqrt(corner)
    # global phase: make a^H h real and nonnegative
    response = np.vdot(a, inst.h)
    if abs(response) > 0:
        a = a * (response / abs(response))
    return a, first, second


def solve_individual(
    inst: LiftedInstance,
    sdp_tol: float = sdp.DEFAULT_TOL,
    max_iter: int = sdp.DEFAULT_MAX_ITER,
    gap_tol: float = sdp.DEFAULT_GAP_TOL,
) -> tuple[GainVector, SdpSolution]:
    """Solve the relaxation and recover the optimal individually-constrained gain."""
    prob = inst.to_sdp()
    solution = sdp.solve(
        prob,
        tol=sdp_tol,
        max_iter=max_iter,
        gap_tol=gap_tol,
        primal_start=sdp.feasible_init(prob, inst),
        dual_start=sdp.feasible_dual_init(prob, inst),
    )
    if not solution.is_optimal:
        raise SdpSolveError(solution)

    raw, first, second = recover_gain(solution.a_matrix, inst)
    if first <= 0 or second > RANK_RATIO_THRESHOLD * first:
        raise RankRecoveryFailure(first, second, solution)

    gain = GainVector(a=raw, constraint=ConstraintKind.INDIVIDUAL)
    usage = gain.powers(inst.d_diag) / inst.p_max_i
    worst = float(np.max(usage))
    if worst > 1.0:
        if worst > 1.0 + BUDGET_ROUNDOFF:
            logger.warning(f"Recovered gain exceeds a budget by {worst - 1.0:.3e} relative")
        gain = GainVector(a=raw / math.sqrt(worst), constraint=ConstraintKind.INDIVIDUAL)

    logger.debug(
        f"Individual-power optimum: snr={snr(gain, inst):.10e} "
        f"sdp={solution.objective_value:.10e} rank_ratio={second / first:.3e}"
    )
    return gain, solution
