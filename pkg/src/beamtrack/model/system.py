"""Data models for the tracked process, the sensor network and its channels."""

from dataclasses import dataclass
from enum import Enum

import numpy as np


class DimensionMismatchError(ValueError):
    """Vectors describing the same sensors have different lengths."""


class ConstraintKind(Enum):
    NONE = "none"
    SUM = "sum"
    INDIVIDUAL = "individual"
    EQUAL = "equal"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class ProcessModel:
    """First-order Gauss-Markov dynamics theta_n = alpha * theta_{n-1} + u_n."""

    alpha: float
    sigma_u2: float
    sigma_theta2: float

    def __post_init__(self) -> None:
        # alpha = 1 is the static-parameter limit; stationary() needs |alpha| < 1
        if not abs(self.alpha) <= 1:
            raise ValueError(f"alpha must satisfy |alpha| <= 1, got {self.alpha}")
        if self.sigma_u2 < 0:
            raise ValueError(f"sigma_u2 must be nonnegative, got {self.sigma_u2}")
        if self.sigma_theta2 <= 0:
            raise ValueError(f"sigma_theta2 must be positive, got {self.sigma_theta2}")

    @classmethod
    def stationary(cls, alpha: float, sigma_theta2: float) -> "ProcessModel":
        """Process whose stationary variance equals sigma_theta2."""
        if not abs(alpha) < 1:
            raise ValueError(f"a stationary process needs |alpha| < 1, got {alpha}")
        return cls(
            alpha=alpha,
            sigma_u2=(1.0 - alpha**2) * sigma_theta2,
            sigma_theta2=sigma_theta2,
        )

    @property
    def is_stationary(self) -> bool:
        return self.sigma_u2 == (1.0 - self.alpha**2) * self.sigma_theta2


@dataclass(eq=False)
class SensorNetwork:
    """Sensor geometry and noise levels as seen from the fusion center."""

    distances: np.ndarray
    sigma_v2: np.ndarray
    gamma: float = 1.0
    sigma_w2: float = 0.5

    def __post_init__(self) -> None:
        self.distances = np.atleast_1d(np.asarray(self.distances, dtype=float))
        self.sigma_v2 = np.atleast_1d(np.asarray(self.sigma_v2, dtype=float))
        if self.distances.shape != self.sigma_v2.shape:
            raise DimensionMismatchError(
                f"{self.distances.size} distances but {self.sigma_v2.size} noise variances"
            )
        if self.distances.size == 0:
            raise ValueError("a sensor network needs at least one sensor")
        if np.any(self.distances <= 0):
            raise ValueError("all sensor distances must be positive")
        if np.any(self.sigma_v2 < 0):
            raise ValueError("measurement-noise variances must be nonnegative")
        if self.sigma_w2 <= 0:
            raise ValueError(f"sigma_w2 must be positive, got {self.sigma_w2}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")

    @property
    def n_sensors(self) -> int:
        return int(self.distances.size)

    @property
    def path_gain(self) -> np.ndarray:
        """Amplitude attenuation 1/d_i^gamma per sensor."""
        return self.distances ** (-self.gamma)

    @classmethod
    def draw(
        cls,
        n_sensors: int,
        rng: np.random.Generator,
        distance_range: tuple[float, float] = (2.0, 8.0),
        sigma_v2_range: tuple[float, float] = (0.0, 0.5),
        sigma_v2_floor: float = 1e-6,
        gamma: float = 1.0,
        sigma_w2: float = 0.5,
    ) -> "SensorNetwork":
        """Draw uniformly placed sensors with uniform noise variances.

        Variances are clamped below at ``sigma_v2_floor`` so the SNR bound and
        the asymptotic gain stay finite.
        """
        distances = rng.uniform(*distance_range, size=n_sensors)
        sigma_v2 = rng.uniform(*sigma_v2_range, size=n_sensors)
        return cls(
            distances=distances,
            sigma_v2=np.clip(sigma_v2, sigma_v2_floor, None),
            gamma=gamma,
            sigma_w2=sigma_w2,
        )


@dataclass(eq=False)
class ChannelRealization:
    """Channel vector h and its unit-variance core h_tilde."""

    h: np.ndarray
    h_tilde: np.ndarray

    @classmethod
    def from_core(cls, h_tilde: np.ndarray, network: SensorNetwork) -> "ChannelRealization":
        h_tilde = np.atleast_1d(np.asarray(h_tilde, dtype=complex))
        if h_tilde.size != network.n_sensors:
            raise DimensionMismatchError(
                f"channel has {h_tilde.size} entries for {network.n_sensors} sensors"
            )
        return cls(h=h_tilde / network.distances**network.gamma, h_tilde=h_tilde)

    @property
    def n_sensors(self) -> int:
        return int(self.h.size)

    def hvh_diag(self, network: SensorNetwork) -> np.ndarray:
        """Diagonal of H V H^H, entries |h_i|^2 sigma_v,i^2."""
        return np.abs(self.h) ** 2 * network.sigma_v2


@dataclass(eq=False)
class GainVector:
    """Conjugate transmit gain/phase vector a with the constraint it was built for."""

    a: np.ndarray
    constraint: ConstraintKind = ConstraintKind.NONE
    degenerate: bool = False

    def __post_init__(self) -> None:
        self.a = np.atleast_1d(np.asarray(self.a, dtype=complex))
        if not np.all(np.isfinite(self.a)):
            raise ValueError("gain vector entries must be finite")

    @classmethod
    def zeros(cls, n_sensors: int, constraint: ConstraintKind = ConstraintKind.NONE) -> "GainVector":
        return cls(a=np.zeros(n_sensors, dtype=complex), constraint=constraint)

    @property
    def n_sensors(self) -> int:
        return int(self.a.size)

    def powers(self, d_diag: np.ndarray) -> np.ndarray:
        """Per-sensor transmit power |a_i|^2 D_ii."""
        return np.abs(self.a) ** 2 * np.asarray(d_diag, dtype=float)

    def total_power(self, d_diag: np.ndarray) -> float:
        """a^H D a."""
        return float(np.sum(self.powers(d_diag)))

    def response(self, ch: ChannelRealization) -> complex:
        """Effective scalar channel a^H h."""
        check_lengths(self.a, ch.h)
        return complex(np.vdot(self.a, ch.h))

    def noise_power(self, ch: ChannelRealization, network: SensorNetwork) -> float:
        """Forwarded sensor-noise power a^H H V H^H a."""
        check_lengths(self.a, ch.h)
        return float(np.sum(np.abs(self.a) ** 2 * ch.hvh_diag(network)))


def check_lengths(*vectors: np.ndarray) -> None:
    sizes = {np.size(v) for v in vectors}
    if len(sizes) > 1:
        raise DimensionMismatchError(f"vector lengths disagree: {sorted(sizes)}")


def build_D(network: SensorNetwork, sigma_theta2: float) -> np.ndarray:
    """Diagonal entries of D = diag{sigma_theta^2 + sigma_v,i^2}."""
    return sigma_theta2 + network.sigma_v2
