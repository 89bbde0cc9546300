"""MSE outage probability of equal-power transmission.

With every sensor spending P_max/N, the posterior MSE exceeds epsilon exactly
when the SNR falls below beta = (P_pred - epsilon)/(epsilon P_pred), i.e. when

    h_tilde^H (Dbar a_e a_e^H Dbar - beta E) h_tilde <= beta sigma_w^2.

The matrix is rank one minus diagonal, so at most one eigenvalue is
positive and the tail of the weighted sum of unit-mean exponentials has a
closed form in that eigenvalue.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..estimation.kalman import posterior_mse
from ..model.sampling import complex_normal
from ..model.system import ConstraintKind, GainVector, SensorNetwork, build_D

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-9
TRIAL_CHUNK = 10_000


class EigenvalueDegeneracy(ArithmeticError):
    """Repeated eigenvalues make the partial-fraction form unusable."""


@dataclass(eq=False)
class OutageInstance:
    """Equal-power outage setup and its derived quantities."""

    network: SensorNetwork
    sigma_theta2: float
    p_max: float
    p_pred: float
    epsilon: float
    a_e: GainVector = field(init=False)
    d_bar: np.ndarray = field(init=False)
    e_diag: np.ndarray = field(init=False)
    e_sorted: np.ndarray = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.p_pred <= 0:
            raise ValueError(f"p_pred must be positive, got {self.p_pred}")
        net = self.network
        self.a_e = equal_power_gain(net, self.sigma_theta2, self.p_max)
        self.d_bar = net.path_gain
        self.e_diag = (
            self.p_max
            * net.sigma_v2
            / (net.n_sensors * build_D(net, self.sigma_theta2) * net.distances ** (2 * net.gamma))
        )
        self.e_sorted = np.sort(self.e_diag)[::-1]
        self.beta = (self.p_pred - self.epsilon) / (self.epsilon * self.p_pred)

    @property
    def n_sensors(self) -> int:
        return self.network.n_sensors

    @property
    def outage_possible(self) -> bool:
        """False when epsilon >= P_pred: the posterior MSE never exceeds the prediction MSE."""
        return self.beta > 0

    @property
    def signal_gain(self) -> float:
        """a_e^H Dbar^2 a_e."""
        return float(np.sum(np.abs(self.a_e.a) ** 2 * self.d_bar**2))


def equal_power_gain(network: SensorNetwork, sigma_theta2: float, p_max: float) -> GainVector:
    """a_e,i = sqrt(P_max/N) / sqrt(sigma_theta^2 + sigma_v,i^2)."""
    if p_max <= 0:
        raise ValueError(f"p_max must be positive, got {p_max}")
    a = math.sqrt(p_max / network.n_sensors) / np.sqrt(build_D(network, sigma_theta2))
    return GainVector(a=a, constraint=ConstraintKind.EQUAL)


def outage_matrix(inst: OutageInstance) -> tuple[np.ndarray, np.ndarray]:
    """B = Dbar a_e a_e^H Dbar - beta E and its eigenvalues sorted descending."""
    v = inst.d_bar * inst.a_e.a
    b = np.outer(v, v.conj()) - inst.beta * np.diag(inst.e_diag)
    b = (b + b.conj().T) / 2
    eigenvalues = np.linalg.eigvalsh(b)[::-1]
    return b, eigenvalues


def outage_probability(inst: OutageInstance) -> float:
    """Closed-form Pr{P_{n|n} > epsilon} for equal-power transmission."""
    if not inst.outage_possible:
        return 0.0
    _, lam = outage_matrix(inst)
    lam_1 = float(lam[0])
    if lam_1 <= 0:
        return 1.0

    others = lam[1:]
    spread = float(np.max(np.abs(lam)))
    gaps = lam_1 - others
    if np.any(np.abs(gaps) < DEGENERACY_TOL * spread):
        raise EigenvalueDegeneracy(
            f"eigenvalue {lam_1:.6e} repeats within {DEGENERACY_TOL:.0e} relative"
        )
    # log-magnitude form of lambda_1^{N-1} / prod (lambda_1 - lambda_l) * exp(-beta sigma_w^2 / lambda_1)
    log_tail = (
        (inst.n_sensors - 1) * math.log(lam_1)
        - float(np.sum(np.log(gaps)))
        - inst.beta * inst.network.sigma_w2 / lam_1
    )
    return float(np.clip(1.0 - math.exp(log_tail), 0.0, 1.0))


def weyl_bounds(inst: OutageInstance) -> list[tuple[float, float]]:
    """Interval for each eigenvalue (descending) from Weyl's inequality."""
    n = inst.n_sensors
    e = inst.e_sorted
    beta = inst.beta
    q = inst.signal_gain
    bounds = [(q - beta * e[0], q - beta * e[n - 1])]
    for i in range(2, n + 1):
        # 1-based: -beta e_{N-i+1} <= lambda_i <= -beta e_{N-i+2}
        bounds.append((-beta * e[n - i], -beta * e[n - i + 1]))
    return bounds


def quadratic_form_events(inst: OutageInstance, h_tilde: np.ndarray) -> np.ndarray:
    """Outage indicator h_tilde^H B h_tilde <= beta sigma_w^2 for each row of h_tilde."""
    b, _ = outage_matrix(inst)
    form = np.einsum("ti,ij,tj->t", h_tilde.conj(), b, h_tilde).real
    return form <= inst.beta * inst.network.sigma_w2


def mse_events(inst: OutageInstance, h_tilde: np.ndarray) -> np.ndarray:
    """Outage indicator P_{n|n} > epsilon computed through the Kalman MSE."""
    h = h_tilde * inst.d_bar
    a = inst.a_e.a
    signal = np.abs(h @ a.conj()) ** 2
    noise = (np.abs(h) ** 2 * inst.network.sigma_v2) @ (np.abs(a) ** 2) + inst.network.sigma_w2
    g = signal / noise
    mse = np.array([posterior_mse(inst.p_pred, float(gi)) for gi in g])
    return mse > inst.epsilon


def _chunk_outages(inst: OutageInstance, count: int, seed: np.random.SeedSequence) -> int:
    rng = np.random.default_rng(seed)
    h_tilde = complex_normal(rng, 1.0, (count, inst.n_sensors))
    h = h_tilde * inst.d_bar
    a = inst.a_e.a
    signal = np.abs(h @ a.conj()) ** 2
    noise = (np.abs(h) ** 2 * inst.network.sigma_v2) @ (np.abs(a) ** 2) + inst.network.sigma_w2
    mse = inst.p_pred / (1.0 + (signal / noise) * inst.p_pred)
    return int(np.count_nonzero(mse > inst.epsilon))


def empirical_outage(
    inst: OutageInstance,
    trials: int,
    rng: np.random.Generator,
    workers: int = 1,
) -> float:
    """Monte Carlo outage frequency over fresh channel draws.

    Trials are split into fixed-size chunks, each with its own stream spawned
    from ``rng``, so the estimate does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if not inst.outage_possible:
        return 0.0
    counts = [min(TRIAL_CHUNK, trials - start) for start in range(0, trials, TRIAL_CHUNK)]
    root = np.random.SeedSequence(int(rng.integers(2**63)))
    seeds = root.spawn(len(counts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outages = sum(pool.map(lambda args: _chunk_outages(inst, *args), zip(counts, seeds)))
    else:
        outages = sum(_chunk_outages(inst, count, seed) for count, seed in zip(counts, seeds))
    return outages / trials


def binomial_stderr(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)
