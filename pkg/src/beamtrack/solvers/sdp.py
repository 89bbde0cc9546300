"""Primal-dual interior-point solver for small Hermitian SDPs.

Solves

    maximize    tr(A Hbar)
    subject to  tr(A Cbar) = 1
                tr(A Dbar_i) <= 0,   i = 1..m
                A >= 0  (Hermitian PSD)

together with its dual

    minimize    z
    subject to  G = sum_i y_i Dbar_i + z Cbar - Hbar >= 0,  y >= 0.

Hermitian matrices of side n are embedded isometrically as real symmetric
matrices of side 2n, so one real PSD cone serves everything. Inequalities
get nonnegative slacks and the resulting standard-form conic program is
solved with an infeasible-start path-following method (HKM search
direction, Mehrotra predictor-corrector, dense Cholesky on the Schur
complement). Constraint rows and the objective are normalized internally;
every reported quantity is mapped back to the original scaling.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Protocol

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_GAP_TOL = 1e-7
DEFAULT_MAX_ITER = 200
STEP_FRACTION = 0.98
MIN_STEP = 1e-14
DIVERGENCE_NORM = 1e12
HERMITIAN_TOL = 1e-12


class SdpStatus(Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"
    NUMERICAL_ERROR = "numerical_error"


class KktResiduals(NamedTuple):
    primal: float
    dual_min_eig: float
    complementarity: float


@dataclass(eq=False)
class SdpProblem:
    """Objective Hbar, equality matrix Cbar (right-hand side eq_rhs) and inequality matrices Dbar_i."""

    objective: np.ndarray
    eq_lhs: np.ndarray
    ineq: list[np.ndarray] = field(default_factory=list)
    eq_rhs: float = 1.0

    def __post_init__(self) -> None:
        self.objective = _as_hermitian(self.objective, "objective")
        self.eq_lhs = _as_hermitian(self.eq_lhs, "eq_lhs")
        self.ineq = [_as_hermitian(d, f"ineq[{i}]") for i, d in enumerate(self.ineq)]
        shapes = {m.shape for m in (self.objective, self.eq_lhs, *self.ineq)}
        if len(shapes) != 1:
            raise ValueError(f"SDP data matrices have mismatched shapes: {sorted(shapes)}")
        eq_eigs = np.linalg.eigvalsh(self.eq_lhs)
        scale = max(1.0, float(np.max(np.abs(eq_eigs))))
        if eq_eigs[0] < -HERMITIAN_TOL * scale or np.trace(self.eq_lhs).real <= 0:
            raise ValueError("eq_lhs must be PSD with strictly positive trace")

    @property
    def dim(self) -> int:
        return int(self.objective.shape[0])

    @property
    def n_ineq(self) -> int:
        return len(self.ineq)


@dataclass(eq=False)
class SdpSolution:
    """Primal matrix A*, dual multipliers (y*, z*) and solver diagnostics."""

    a_matrix: np.ndarray
    duals_y: np.ndarray
    dual_z: float
    objective_value: float
    status: SdpStatus
    iterations: int
    kkt_residuals: KktResiduals | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL


class SlaterContext(Protocol):
    """Instance data from which strictly feasible primal and dual points are built."""

    h: np.ndarray
    hvh_diag: np.ndarray
    d_diag: np.ndarray
    sigma_w2: float
    p_max_i: np.ndarray


def _as_hermitian(matrix: np.ndarray, name: str) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square, got shape {matrix.shape}")
    scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
    if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        raise ValueError(f"{name} is not Hermitian")
    return (matrix + matrix.conj().T) / 2


def embed(matrix: np.ndarray) -> np.ndarray:
    """Real symmetric image [[Re, -Im], [Im, Re]] of a Hermitian matrix."""
    return np.block([[matrix.real, -matrix.imag], [matrix.imag, matrix.real]])


def unembed(matrix: np.ndarray) -> np.ndarray:
    """Hermitian matrix nearest to a real embedding (block-averaged)."""
    n = matrix.shape[0] // 2
    real = (matrix[:n, :n] + matrix[n:, n:]) / 2
    imag = (matrix[n:, :n] - matrix[:n, n:]) / 2
    herm = real + 1j * imag
    return (herm + herm.conj().T) / 2


def _project(matrix: np.ndarray) -> np.ndarray:
    return embed(unembed(matrix))


def dual_slack(prob: SdpProblem, y: np.ndarray, z: float) -> np.ndarray:
    """G = sum_i y_i Dbar_i + z Cbar - Hbar."""
    g = z * prob.eq_lhs - prob.objective
    for y_i, d_i in zip(y, prob.ineq):
        g = g + y_i * d_i
    return g


def kkt_check(prob: SdpProblem, sol: SdpSolution) -> KktResiduals:
    """(primal residual, min eigenvalue of G*, |tr(A* G*)|) in the original scaling."""
    a = sol.a_matrix
    eq_residual = abs(np.trace(a @ prob.eq_lhs).real - prob.eq_rhs)
    ineq_violation = max(
        (max(0.0, np.trace(a @ d).real) for d in prob.ineq), default=0.0
    )
    psd_violation = max(0.0, -float(np.linalg.eigvalsh(a)[0]))
    g = dual_slack(prob, sol.duals_y, sol.dual_z)
    return KktResiduals(
        primal=float(max(eq_residual, ineq_violation, psd_violation)),
        dual_min_eig=float(np.linalg.eigvalsh(g)[0]),
        complementarity=float(abs(np.trace(a @ g).real)),
    )


def feasible_init(prob: SdpProblem, context: SlaterContext) -> np.ndarray:
    """Strictly feasible primal point diag{ab, ..., ab, b}.

    a sits at half of min_i P_max,i / D_ii and b normalizes tr(A Cbar) to one.
    """
    n = prob.dim - 1
    a = 0.5 * float(np.min(context.p_max_i / context.d_diag))
    b = 1.0 / (a * float(np.sum(context.hvh_diag)) + context.sigma_w2)
    return np.diag(np.concatenate([np.full(n, a * b), [b]])).astype(complex)


def feasible_dual_init(prob: SdpProblem, context: SlaterContext) -> tuple[np.ndarray, float]:
    """Strictly feasible dual point (y^f, z^f).

    With y_i D_ii = 2 h^H h every diagonal entry of the leading block of G
    exceeds the largest eigenvalue of h h^H, and z^f is taken large enough to
    make the corner entry of G positive.
    """
    energy = float(np.vdot(context.h, context.h).real)
    y = (2.0 * energy if energy > 0 else 1.0) / context.d_diag
    z = 2.0 * (energy + float(np.sum(y * context.p_max_i))) / context.sigma_w2
    return y, z


def _step_to_boundary(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha dx still PSD (inf when unbounded)."""
    chol = scipy.linalg.cholesky(x, lower=True)
    t = scipy.linalg.solve_triangular(chol, dx, lower=True)
    t = scipy.linalg.solve_triangular(chol, t.T, lower=True)
    lam_min = float(np.linalg.eigvalsh((t + t.T) / 2)[0])
    return np.inf if lam_min >= 0 else -1.0 / lam_min


def _ratio_test(v: np.ndarray, dv: np.ndarray) -> float:
    shrinking = dv < 0
    if not np.any(shrinking):
        return np.inf
    return float(np.min(-v[shrinking] / dv[shrinking]))


class _SchurSystem:
    """Factored Schur complement M dy = rhs, reused by predictor and corrector."""

    def __init__(self, m: np.ndarray):
        self.m = m
        try:
            self.factor = scipy.linalg.cho_factor(m)
        except np.linalg.LinAlgError:
            logger.debug("Schur complement lost definiteness; using least squares")
            self.factor = None

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.factor is not None:
            return scipy.linalg.cho_solve(self.factor, rhs)
        return np.linalg.lstsq(self.m, rhs, rcond=None)[0]


def solve(
    prob: SdpProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    gap_tol: float = DEFAULT_GAP_TOL,
    primal_start: np.ndarray | None = None,
    dual_start: tuple[np.ndarray, float] | None = None,
) -> SdpSolution:
    """Run the interior-point method from the given (or a default) starting point."""
    n_herm = prob.dim
    nn = 2 * n_herm
    m = prob.n_ineq

    # Standard form: min <c, X> s.t. <a_k, X> + [k >= 1] s_k = b_k
    a_rows = np.stack([0.5 * embed(mat) for mat in (prob.eq_lhs, *prob.ineq)])
    row_scale = np.linalg.norm(a_rows, axis=(1, 2))
    row_scale[row_scale == 0] = 1.0
    a_rows /= row_scale[:, None, None]
    b = np.zeros(m + 1)
    b[0] = prob.eq_rhs / row_scale[0]
    c = -0.5 * embed(prob.objective)
    obj_scale = float(np.linalg.norm(c)) or 1.0
    c /= obj_scale
    identity = np.eye(nn)

    x, s = _primal_start(a_rows, nn, m, primal_start)
    y, z_mat, w = _dual_start(a_rows, c, nn, m, dual_start, row_scale, obj_scale)

    status = SdpStatus.MAX_ITERATIONS
    iteration = 0
    solution = None
    for iteration in range(1, max_iter + 1):
        rp = b - np.einsum("kab,ab->k", a_rows, x)
        rp[1:] -= s
        rd_mat = c - np.tensordot(y, a_rows, axes=1) - z_mat
        rd_vec = -y[1:] - w
        mu = (float(np.sum(x * z_mat)) + float(s @ w)) / (nn + m)

        pobj = float(np.sum(c * x))
        dobj = float(b @ y)
        pres = float(np.linalg.norm(rp)) / (1.0 + float(np.linalg.norm(b)))
        dres = float(np.sqrt(np.sum(rd_mat**2) + rd_vec @ rd_vec)) / (1.0 + float(np.linalg.norm(c)))
        rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))

        if pres <= tol and dres <= tol:
            # weak duality: tr(A Hbar) <= z for any feasible pair
            if -pobj > -dobj + tol * (1.0 + abs(dobj)):
                logger.warning(
                    f"Weak duality violated at iteration {iteration}: "
                    f"{-pobj * obj_scale} > {-dobj * obj_scale}"
                )
            if rel_gap <= gap_tol:
                candidate = _map_back(prob, x, y, row_scale, obj_scale, SdpStatus.OPTIMAL, iteration)
                if _meets_tolerances(candidate, tol, gap_tol):
                    solution = candidate
                    status = SdpStatus.OPTIMAL
                    break

        if max(np.max(np.abs(x)), np.max(np.abs(y))) > DIVERGENCE_NORM:
            logger.info(f"SDP iterates diverged at iteration {iteration}; declaring infeasible")
            status = SdpStatus.INFEASIBLE
            break

        try:
            z_factor = scipy.linalg.cho_factor(z_mat)
        except np.linalg.LinAlgError:
            logger.warning(f"Dual slack lost definiteness at iteration {iteration}")
            status = SdpStatus.NUMERICAL_ERROR
            break
        z_inv = scipy.linalg.cho_solve(z_factor, identity)
        xaz = x @ a_rows @ z_inv
        schur = np.einsum("kab,jba->kj", a_rows, xaz)
        schur = (schur + schur.T) / 2
        schur[1:, 1:] += np.diag(s / w)
        system = _SchurSystem(schur)

        def direction(rc_mat: np.ndarray, rc_vec: np.ndarray):
            g = (rc_mat - x @ rd_mat) @ z_inv
            rhs = rp - np.einsum("kab,ba->k", a_rows, g)
            rhs[1:] -= (rc_vec - s * rd_vec) / w
            dy = system.solve(rhs)
            dz = rd_mat - np.tensordot(dy, a_rows, axes=1)
            dx = (rc_mat - x @ dz) @ z_inv
            dx = (dx + dx.T) / 2
            dw = rd_vec - dy[1:]
            ds = (rc_vec - s * dw) / w
            return dx, ds, dy, dz, dw

        try:
            # predictor
            dx, ds, dy, dz, dw = direction(-x @ z_mat, -s * w)
            alpha_p = min(1.0, _step_to_boundary(x, dx), _ratio_test(s, ds))
            alpha_d = min(1.0, _step_to_boundary(z_mat, dz), _ratio_test(w, dw))
            mu_aff = (
                float(np.sum((x + alpha_p * dx) * (z_mat + alpha_d * dz)))
                + float((s + alpha_p * ds) @ (w + alpha_d * dw))
            ) / (nn + m)
            sigma = min(1.0, max(0.0, mu_aff / mu) ** 3)

            # corrector
            rc_mat = sigma * mu * identity - x @ z_mat - dx @ dz
            rc_vec = sigma * mu - s * w - ds * dw
            dx, ds, dy, dz, dw = direction(rc_mat, rc_vec)
            alpha_p = min(1.0, STEP_FRACTION * min(_step_to_boundary(x, dx), _ratio_test(s, ds)))
            alpha_d = min(1.0, STEP_FRACTION * min(_step_to_boundary(z_mat, dz), _ratio_test(w, dw)))
        except np.linalg.LinAlgError:
            logger.warning(f"Factorization failed at iteration {iteration}")
            status = SdpStatus.NUMERICAL_ERROR
            break

        logger.debug(
            f"sdp it={iteration} pobj={-pobj * obj_scale:.10e} dobj={-dobj * obj_scale:.10e} "
            f"gap={rel_gap:.3e} pres={pres:.3e} dres={dres:.3e} mu={mu:.3e} "
            f"pstep={alpha_p:.3e} dstep={alpha_d:.3e}"
        )

        if max(alpha_p, alpha_d) < MIN_STEP:
            logger.info(f"SDP step sizes collapsed at iteration {iteration}; declaring infeasible")
            status = SdpStatus.INFEASIBLE
            break

        x = _project(x + alpha_p * dx)
        s = s + alpha_p * ds
        y = y + alpha_d * dy
        z_mat = _project(z_mat + alpha_d * dz)
        w = w + alpha_d * dw

    if solution is None:
        solution = _map_back(prob, x, y, row_scale, obj_scale, status, iteration)
        if status is SdpStatus.NUMERICAL_ERROR and _meets_tolerances(solution, tol, gap_tol):
            # the last iterate already certifies optimality
            solution.status = SdpStatus.OPTIMAL
    logger.debug(
        f"SDP finished: status={solution.status.value} iterations={solution.iterations} "
        f"value={solution.objective_value:.12e}"
    )
    return solution


def _meets_tolerances(candidate: SdpSolution, tol: float, gap_tol: float) -> bool:
    residuals = candidate.kkt_residuals
    return (
        residuals.primal <= tol
        and residuals.dual_min_eig >= -tol
        and residuals.complementarity <= gap_tol * (1.0 + abs(candidate.objective_value))
    )


def _primal_start(
    a_rows: np.ndarray, nn: int, m: int, primal_start: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray]:
    if primal_start is None:
        return np.eye(nn), np.ones(m)
    x = embed(_as_hermitian(primal_start, "primal_start"))
    s = -np.einsum("kab,ab->k", a_rows[1:], x)
    if np.any(s <= 0):
        logger.debug("Primal start is not strictly feasible; slacks reset to one")
        s = np.ones(m)
    return x, s


def _dual_start(
    a_rows: np.ndarray,
    c: np.ndarray,
    nn: int,
    m: int,
    dual_start: tuple[np.ndarray, float] | None,
    row_scale: np.ndarray,
    obj_scale: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if dual_start is not None:
        y_ineq, z = dual_start
        # min-form multipliers are the negated dual variables
        y = -np.concatenate([[z], np.asarray(y_ineq, dtype=float)]) * row_scale / obj_scale
        z_mat = _project(c - np.tensordot(y, a_rows, axes=1))
        try:
            np.linalg.cholesky(z_mat)
            if np.all(-y[1:] > 0):
                return y, z_mat, -y[1:]
        except np.linalg.LinAlgError:
            pass
        logger.debug("Dual start is not strictly feasible; using the default start")
    return np.zeros(m + 1), np.eye(nn), np.ones(m)


def _map_back(
    prob: SdpProblem,
    x: np.ndarray,
    y: np.ndarray,
    row_scale: np.ndarray,
    obj_scale: float,
    status: SdpStatus,
    iterations: int,
) -> SdpSolution:
    a_matrix = unembed(x)
    y_orig = y * obj_scale / row_scale
    solution = SdpSolution(
        a_matrix=a_matrix,
        duals_y=np.maximum(-y_orig[1:], 0.0),
        dual_z=float(-y_orig[0]),
        objective_value=float(np.trace(a_matrix @ prob.objective).real),
        status=status,
        iterations=iterations,
    )
    solution.kkt_residuals = kkt_check(prob, solution)
    return solution
