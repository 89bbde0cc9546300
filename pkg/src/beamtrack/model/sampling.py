"""Draw process steps, channels and fusion-center observations."""

import numpy as np

from .system import (
    ChannelRealization,
    GainVector,
    ProcessModel,
    SensorNetwork,
    check_lengths,
)


def complex_normal(
    rng: np.random.Generator,
    variance: float | np.ndarray,
    size: int | tuple[int, ...] | None = None,
) -> np.ndarray:
    """Circularly-symmetric CN(0, variance) draws.

    Real and imaginary parts are independent with variance/2 each, so |z|^2
    is exponential with mean ``variance``.
    """
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def step_process(
    theta: complex | np.ndarray, model: ProcessModel, rng: np.random.Generator
) -> complex | np.ndarray:
    """Advance theta_n = alpha * theta_{n-1} + u_n, elementwise over arrays."""
    theta = np.asarray(theta, dtype=complex)
    if model.sigma_u2 == 0:
        nxt = model.alpha * theta
    else:
        nxt = model.alpha * theta + complex_normal(rng, model.sigma_u2, theta.shape)
    return complex(nxt) if nxt.ndim == 0 else nxt


def initial_theta(
    variance: float, rng: np.random.Generator, size: int | None = None
) -> complex | np.ndarray:
    """Draw theta_0 ~ CN(0, variance)."""
    theta = complex_normal(rng, variance, size)
    return complex(theta) if size is None else theta


def sample_channel(network: SensorNetwork, rng: np.random.Generator) -> ChannelRealization:
    """Draw h_tilde ~ CN(0, I) and scale by path loss."""
    h_tilde = complex_normal(rng, 1.0, network.n_sensors)
    return ChannelRealization.from_core(h_tilde, network)


def observe(
    theta: complex | np.ndarray,
    a: GainVector,
    ch: ChannelRealization,
    network: SensorNetwork,
    rng: np.random.Generator,
) -> complex | np.ndarray:
    """Received signal y = a^H h theta + a^H H v + w.

    ``theta`` may be an array of independent trials; each gets its own sensor
    and fusion-center noise.
    """
    check_lengths(a.a, ch.h, network.sigma_v2)
    theta = np.asarray(theta, dtype=complex)
    v = complex_normal(rng, network.sigma_v2, theta.shape + (network.n_sensors,))
    w = complex_normal(rng, network.sigma_w2, theta.shape)
    # a^H H v = sum_i conj(a_i) h_i v_i
    forwarded = v @ (np.conj(a.a) * ch.h)
    y = a.response(ch) * theta + forwarded + w
    return complex(y) if y.ndim == 0 else y
