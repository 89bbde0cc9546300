"""Fusion-center Kalman filter for the scalar complex parameter.

All quantities are written in the Hermitian form

    k = P h^H a / (a^H H V H^H a + P |a^H h|^2 + sigma_w^2)

so the innovation variance is real by construction.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..model.system import ChannelRealization, GainVector, ProcessModel, SensorNetwork


class Prediction(NamedTuple):
    theta_hat: complex | np.ndarray
    p: float


@dataclass(frozen=True, eq=False)
class KalmanState:
    """Posterior snapshot (theta_hat_{n|n}, P_{n|n}).

    ``theta_hat`` may hold one estimate per Monte Carlo trial; ``p`` is shared
    because it does not depend on the observations.
    """

    theta_hat: complex | np.ndarray
    p: float

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ValueError(f"posterior MSE must be nonnegative, got {self.p}")

    @classmethod
    def from_prediction(cls, pred: Prediction) -> "KalmanState":
        """State carried forward unchanged when no measurement arrives."""
        return cls(theta_hat=pred.theta_hat, p=pred.p)


def initial_prediction(p_init: float = 1.0, n_trials: int | None = None) -> Prediction:
    """theta_hat_{0|-1} = 0 and P_{0|-1} = p_init."""
    theta_hat = 0j if n_trials is None else np.zeros(n_trials, dtype=complex)
    return Prediction(theta_hat=theta_hat, p=float(p_init))


def predict(state: KalmanState, model: ProcessModel) -> Prediction:
    return Prediction(
        theta_hat=model.alpha * state.theta_hat,
        p=model.alpha**2 * state.p + model.sigma_u2,
    )


def gain(
    p_pred: float, a: GainVector, ch: ChannelRealization, network: SensorNetwork
) -> complex:
    """Kalman gain for the effective scalar measurement a^H h."""
    if p_pred < 0:
        raise ValueError(f"prediction MSE must be nonnegative, got {p_pred}")
    response = a.response(ch)
    denominator = a.noise_power(ch, network) + p_pred * abs(response) ** 2 + network.sigma_w2
    return complex(p_pred * response.conjugate() / denominator)


def update(
    pred: Prediction,
    y: complex | np.ndarray,
    a: GainVector,
    ch: ChannelRealization,
    k: complex,
) -> KalmanState:
    response = a.response(ch)
    theta_hat = pred.theta_hat + k * (y - response * pred.theta_hat)
    # k a^H h is real in exact arithmetic; clip keeps P in [0, P_pred]
    shrink = float(np.real(k * response))
    p = float(np.clip((1.0 - shrink) * pred.p, 0.0, pred.p))
    return KalmanState(theta_hat=theta_hat, p=p)


def posterior_mse(p_pred: float, g: float) -> float:
    """P_{n|n} = P_pred / (1 + g P_pred) for SNR objective value g."""
    if p_pred < 0 or g < 0:
        raise ValueError(f"need p_pred >= 0 and g >= 0, got {p_pred}, {g}")
    if np.isinf(g):
        return 0.0
    return p_pred / (1.0 + g * p_pred)
