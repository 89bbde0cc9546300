"""Deterministic Monte Carlo drivers for the MSE, outage and tracking experiments.

Every random draw comes from a stream keyed by (seed, spawn key), so a given
config and seed always produce the same rows, whatever the worker count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from ..analysis.outage import (
    EigenvalueDegeneracy,
    OutageInstance,
    binomial_stderr,
    empirical_outage,
    equal_power_gain,
    outage_probability,
)
from ..beamforming import indivpower, sumpower
from ..beamforming.indivpower import NonPositiveCornerError, RankRecoveryFailure, SdpSolveError
from ..beamforming.sumpower import SumPowerInstance
from ..config import ConstraintMode, ExperimentConfig, ExperimentKind
from ..estimation.kalman import gain, initial_prediction, posterior_mse, predict, update
from ..model.sampling import initial_theta, observe, sample_channel, step_process
from ..model.system import ChannelRealization, GainVector, ProcessModel, SensorNetwork
from .results import ResultRow

logger = logging.getLogger(__name__)

LOWER_BOUND_METHOD = "lower_bound"


class GainFailure(RuntimeError):
    """A gain could not be computed for one realization."""


def realization_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for the work item identified by ``key``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def process_model(cfg: ExperimentConfig) -> ProcessModel:
    if cfg.stationary:
        return ProcessModel.stationary(cfg.alpha, cfg.sigma_theta2)
    return ProcessModel(alpha=cfg.alpha, sigma_u2=cfg.sigma_u2, sigma_theta2=cfg.sigma_theta2)


def draw_network(cfg: ExperimentConfig, n_sensors: int, rng: np.random.Generator) -> SensorNetwork:
    return SensorNetwork.draw(
        n_sensors,
        rng,
        distance_range=cfg.distance_range,
        sigma_v2_range=cfg.sigma_v2_range,
        sigma_v2_floor=cfg.sigma_v2_floor,
        gamma=cfg.gamma,
        sigma_w2=cfg.sigma_w2,
    )


def mode_gain(
    mode: ConstraintMode,
    ch: ChannelRealization,
    network: SensorNetwork,
    cfg: ExperimentConfig,
    p_max: float,
) -> GainVector:
    """Gain for one constraint mode; individual budgets are P_max / N each.

    Raises GainFailure when the relaxation cannot be solved or recovered.
    """
    if mode is ConstraintMode.NONE:
        return GainVector.zeros(network.n_sensors)
    if mode is ConstraintMode.SUM:
        inst = SumPowerInstance.from_channel(ch, network, cfg.sigma_theta2, p_max)
        return sumpower.optimal_gain_sum(inst)
    if mode is ConstraintMode.EQUAL:
        return equal_power_gain(network, cfg.sigma_theta2, p_max)
    if mode is ConstraintMode.INDIVIDUAL:
        lifted = indivpower.lift(ch.h, network, cfg.sigma_theta2, p_max / network.n_sensors)
        try:
            a, _ = indivpower.solve_individual(
                lifted, sdp_tol=cfg.sdp_tol, max_iter=cfg.sdp_max_iter, gap_tol=cfg.sdp_gap_tol
            )
        except (SdpSolveError, RankRecoveryFailure, NonPositiveCornerError) as e:
            raise GainFailure(str(e)) from e
        return a
    raise ValueError(f"no single gain for mode {mode.value}")


def effective_snr(a: GainVector, ch: ChannelRealization, network: SensorNetwork) -> float:
    """|a^H h|^2 / (a^H H V H^H a + sigma_w^2)."""
    return abs(a.response(ch)) ** 2 / (a.noise_power(ch, network) + network.sigma_w2)


def _mean_and_stderr(values: list[float] | np.ndarray) -> tuple[float, float]:
    if len(values) == 0:
        return math.nan, 0.0
    arr = np.asarray(values, dtype=float)
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), stderr


def _map_items(func: Callable[[int], dict], count: int, workers: int) -> list[dict]:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, range(count)))
    return [func(r) for r in range(count)]


def mse_label(mode: ConstraintMode, p_max: float) -> str:
    return f"{mode.value}@pmax={p_max:g}"


def run_mse_vs_sensors(cfg: ExperimentConfig) -> list[ResultRow]:
    """One-step posterior MSE from P_pred = p_init, averaged over realizations.

    All P_max points and modes of a realization share its network and channel.
    """
    modes = cfg.constraint_mode.expand()
    rows = []
    for n in cfg.n_sensors:
        logger.info(f"MSE sweep: N={n}, {cfg.realizations} realizations")

        def realization(r: int, n: int = n) -> dict[str, float | None]:
            rng = realization_rng(cfg.seed, n, r)
            network = draw_network(cfg, n, rng)
            ch = sample_channel(network, rng)
            out: dict[str, float | None] = {
                LOWER_BOUND_METHOD: sumpower.mse_lower_bound(cfg.p_init, network)
            }
            for p_max in cfg.p_max:
                for mode in modes:
                    label = mse_label(mode, p_max)
                    try:
                        a = mode_gain(mode, ch, network, cfg, p_max)
                    except GainFailure as e:
                        logger.warning(f"N={n} realization {r} {label}: {e}")
                        out[label] = None
                        continue
                    out[label] = posterior_mse(cfg.p_init, effective_snr(a, ch, network))
            return out

        results = _map_items(realization, cfg.realizations, cfg.workers)
        labels = [LOWER_BOUND_METHOD] + [mse_label(m, p) for p in cfg.p_max for m in modes]
        for label in labels:
            values = [res[label] for res in results if res[label] is not None]
            failures = len(results) - len(values)
            mean, stderr = _mean_and_stderr(values)
            rows.append(
                ResultRow(
                    experiment=cfg.experiment.value,
                    param=n,
                    method=label,
                    metric=mean,
                    stderr=stderr,
                    n_realizations=len(values),
                    seed=cfg.seed,
                    failures=failures,
                )
            )
    failed = sum(row.failures for row in rows)
    if failed:
        logger.warning(f"MSE sweep finished with {failed} failed realizations")
    return rows


def run_outage_vs_power(cfg: ExperimentConfig) -> list[ResultRow]:
    """Closed-form and empirical equal-power outage for one network draw."""
    n = cfg.n_sensors[0]
    network = draw_network(cfg, n, realization_rng(cfg.seed, 0))
    rows = []
    for index, p_max in enumerate(cfg.p_max):
        inst = OutageInstance(
            network=network,
            sigma_theta2=cfg.sigma_theta2,
            p_max=p_max,
            p_pred=cfg.p_init,
            epsilon=cfg.epsilon,
        )
        empirical = empirical_outage(
            inst, cfg.trials, realization_rng(cfg.seed, 1, index), workers=cfg.workers
        )
        empirical_se = binomial_stderr(empirical, cfg.trials)
        try:
            theory = ResultRow(
                experiment=cfg.experiment.value,
                param=p_max,
                method="theory",
                metric=outage_probability(inst),
                stderr=0.0,
                n_realizations=1,
                seed=cfg.seed,
            )
        except EigenvalueDegeneracy as e:
            logger.warning(f"P_max={p_max:g}: {e}; using the Monte Carlo estimate")
            theory = ResultRow(
                experiment=cfg.experiment.value,
                param=p_max,
                method="theory_mc",
                metric=empirical,
                stderr=empirical_se,
                n_realizations=cfg.trials,
                seed=cfg.seed,
            )
        rows.append(theory)
        rows.append(
            ResultRow(
                experiment=cfg.experiment.value,
                param=p_max,
                method="empirical",
                metric=empirical,
                stderr=empirical_se,
                n_realizations=cfg.trials,
                seed=cfg.seed,
            )
        )
        logger.info(f"Outage at P_max={p_max:g}: theory={theory.metric:.4f} empirical={empirical:.4f}")
    return rows


def run_tracking_trace(cfg: ExperimentConfig) -> list[ResultRow]:
    """Multi-step tracking over a fixed channel sequence shared by all trials.

    Per step and mode, emits the recursion's P_{n|n} and the empirical mean
    of |theta_n - theta_hat_{n|n}|^2 over the trials.
    """
    n = cfg.n_sensors[0]
    p_max = cfg.p_max[0]
    setup_rng = realization_rng(cfg.seed, 0)
    network = draw_network(cfg, n, setup_rng)
    channels = [sample_channel(network, setup_rng) for _ in range(cfg.steps)]
    model = process_model(cfg)

    rows = []
    for mode in cfg.constraint_mode.expand():
        # common random numbers across modes
        rng = realization_rng(cfg.seed, 1)
        theta = initial_theta(cfg.p_init, rng, cfg.trials)
        pred = initial_prediction(cfg.p_init, cfg.trials)
        logger.info(f"Tracking {cfg.steps} steps with mode {mode.value}, {cfg.trials} trials")

        for step, ch in enumerate(channels, start=1):
            failures = 0
            try:
                a = mode_gain(mode, ch, network, cfg, p_max)
            except GainFailure as e:
                logger.warning(f"step {step} {mode.value}: {e}; no transmission this step")
                a = GainVector.zeros(n)
                failures = 1

            if step > 1:
                theta = step_process(theta, model, rng)
                pred = predict(state, model)
            y = observe(theta, a, ch, network, rng)
            state = update(pred, y, a, ch, gain(pred.p, a, ch, network))

            errors = np.abs(theta - state.theta_hat) ** 2
            mean, stderr = _mean_and_stderr(errors)
            rows.append(
                ResultRow(
                    experiment=cfg.experiment.value,
                    param=step,
                    method=f"{mode.value}/recursion",
                    metric=state.p,
                    stderr=0.0,
                    n_realizations=1,
                    seed=cfg.seed,
                    failures=failures,
                )
            )
            rows.append(
                ResultRow(
                    experiment=cfg.experiment.value,
                    param=step,
                    method=f"{mode.value}/empirical",
                    metric=mean,
                    stderr=stderr,
                    n_realizations=cfg.trials,
                    seed=cfg.seed,
                    failures=failures,
                )
            )
    return rows


RUNNERS: dict[ExperimentKind, Callable[[ExperimentConfig], list[ResultRow]]] = {
    ExperimentKind.MSE_VS_SENSORS: run_mse_vs_sensors,
    ExperimentKind.OUTAGE_VS_POWER: run_outage_vs_power,
    ExperimentKind.TRACKING_TRACE: run_tracking_trace,
}


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    return RUNNERS[cfg.experiment](cfg)
