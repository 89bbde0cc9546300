"""Optimal gain and phase under a total transmit power budget.

Maximizing the SNR a^H h h^H a / (a^H H V H^H a + sigma_w^2) subject to
a^H D a <= P_max is a Rayleigh quotient with the budget active at the
optimum. With B = H V H^H + (sigma_w^2 / P_max) D the maximizer points along
B^{-1} h and the optimal value is h^H B^{-1} h. B is diagonal here, so every
inverse is taken entrywise.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..model.system import (
    ChannelRealization,
    ConstraintKind,
    GainVector,
    SensorNetwork,
    build_D,
    check_lengths,
)

logger = logging.getLogger(__name__)


class UndefinedDirectionError(ValueError):
    """The high-power gain direction needs every h_i and sigma_v,i^2 nonzero."""


@dataclass(eq=False)
class SumPowerInstance:
    """One channel draw with its noise kernels and the total power budget."""

    h: np.ndarray
    hvh: np.ndarray
    d_diag: np.ndarray
    sigma_w2: float
    p_max: float

    def __post_init__(self) -> None:
        self.h = np.atleast_1d(np.asarray(self.h, dtype=complex))
        self.hvh = np.atleast_1d(np.asarray(self.hvh, dtype=float))
        self.d_diag = np.atleast_1d(np.asarray(self.d_diag, dtype=float))
        check_lengths(self.h, self.hvh, self.d_diag)
        if self.p_max <= 0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        if np.any(self.hvh < 0):
            raise ValueError("H V H^H must have nonnegative diagonal entries")
        if np.any(self.d_diag <= 0):
            raise ValueError("D must have positive diagonal entries")

    @classmethod
    def from_channel(
        cls,
        ch: ChannelRealization,
        network: SensorNetwork,
        sigma_theta2: float,
        p_max: float,
    ) -> "SumPowerInstance":
        return cls(
            h=ch.h,
            hvh=ch.hvh_diag(network),
            d_diag=build_D(network, sigma_theta2),
            sigma_w2=network.sigma_w2,
            p_max=p_max,
        )

    @property
    def sigma_v2(self) -> np.ndarray:
        """Measurement-noise variances recovered from |h_i|^2 sigma_v,i^2."""
        gains = np.abs(self.h) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(gains > 0, self.hvh / gains, np.nan)


def snr_objective(a: GainVector, inst: SumPowerInstance) -> float:
    check_lengths(a.a, inst.h)
    signal = abs(np.vdot(a.a, inst.h)) ** 2
    noise = float(np.sum(np.abs(a.a) ** 2 * inst.hvh)) + inst.sigma_w2
    return float(signal / noise)


def _b_diag(inst: SumPowerInstance) -> np.ndarray:
    return inst.hvh + (inst.sigma_w2 / inst.p_max) * inst.d_diag


def build_B(inst: SumPowerInstance) -> np.ndarray:
    """B = H V H^H + (sigma_w^2 / P_max) D as a dense (diagonal) matrix."""
    return np.diag(_b_diag(inst))


def optimal_gain_sum(inst: SumPowerInstance) -> GainVector:
    """Maximizer along B^{-1} h, rescaled so that a^H D a = P_max exactly."""
    if not np.any(inst.h):
        logger.debug("Zero channel; returning flagged zero gain")
        return GainVector(
            a=np.zeros_like(inst.h), constraint=ConstraintKind.SUM, degenerate=True
        )
    direction = inst.h / _b_diag(inst)
    # h^H B^-1 D B^-1 h
    direction_power = float(np.sum(np.abs(direction) ** 2 * inst.d_diag))
    a = math.sqrt(inst.p_max / direction_power) * direction
    return GainVector(a=a, constraint=ConstraintKind.SUM)


def optimal_value(inst: SumPowerInstance) -> float:
    """g* = h^H B^{-1} h."""
    return float(np.sum(np.abs(inst.h) ** 2 / _b_diag(inst)))


def generalized_eigenvalue(inst: SumPowerInstance) -> float:
    """Largest eigenvalue of the pencil (h h^H, B), computed by a dense eigensolver."""
    numerator = np.outer(inst.h, inst.h.conj())
    eigenvalues = scipy.linalg.eigh(numerator, build_B(inst), eigvals_only=True)
    return float(eigenvalues[-1])


def snr_upper_bound(network: SensorNetwork) -> float:
    """sum_i 1/sigma_v,i^2, or +inf when some sensor observes noiselessly."""
    if np.any(network.sigma_v2 == 0):
        logger.debug("Noiseless sensor present; SNR upper bound is infinite")
        return math.inf
    return float(np.sum(1.0 / network.sigma_v2))


def mse_lower_bound(p_pred: float, network: SensorNetwork) -> float:
    """P_pred / (1 + P_pred sum_i 1/sigma_v,i^2), the P_max -> infinity limit."""
    if p_pred < 0:
        raise ValueError(f"prediction MSE must be nonnegative, got {p_pred}")
    bound = snr_upper_bound(network)
    if math.isinf(bound) or p_pred == 0:
        return 0.0
    return p_pred / (1.0 + bound * p_pred)


def asymptotic_gain(inst: SumPowerInstance) -> GainVector:
    """High-power gain with a_i proportional to 1/(conj(h_i) sigma_v,i^2).

    Rescaled so that a^H D a = P_max.
    """
    sigma_v2 = inst.sigma_v2
    if np.any(inst.h == 0) or np.any(~(sigma_v2 > 0)):
        raise UndefinedDirectionError(
            "asymptotic gain needs every channel coefficient and noise variance nonzero"
        )
    direction = 1.0 / (np.conj(inst.h) * sigma_v2)
    direction_power = float(np.sum(np.abs(direction) ** 2 * inst.d_diag))
    a = math.sqrt(inst.p_max / direction_power) * direction
    return GainVector(a=a, constraint=ConstraintKind.ASYMPTOTIC)
