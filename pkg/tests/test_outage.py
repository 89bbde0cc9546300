"""Tests for equal-power outage analysis."""

import math

import numpy as np
import pytest

from beamtrack.analysis import outage
from beamtrack.analysis.outage import (
    EigenvalueDegeneracy,
    OutageInstance,
    binomial_stderr,
    empirical_outage,
    equal_power_gain,
    mse_events,
    outage_matrix,
    outage_probability,
    quadratic_form_events,
    weyl_bounds,
)
from beamtrack.model.sampling import complex_normal
from beamtrack.model.system import ConstraintKind, SensorNetwork, build_D


def unit_instance(epsilon: float = 2.0 / 3.0, **network_overrides) -> OutageInstance:
    """N = 1, d = 1, sigma_theta^2 = sigma_v^2 = sigma_w^2 = 1, P_max = 2, P_pred = 1."""
    params = dict(distances=[1.0], sigma_v2=[1.0], sigma_w2=1.0)
    params.update(network_overrides)
    return OutageInstance(
        network=SensorNetwork(**params), sigma_theta2=1.0, p_max=2.0, p_pred=1.0, epsilon=epsilon
    )


def random_outage_instances(seed: int, count: int):
    gen = np.random.default_rng(seed)
    for index in range(count):
        network = SensorNetwork.draw(int(gen.integers(1, 21)), gen)
        yield OutageInstance(
            network=network,
            sigma_theta2=1.0,
            p_max=float(10 ** gen.uniform(0, 4.5)),
            p_pred=1.0,
            epsilon=float(gen.uniform(0.01, 0.99)),
        )


class TestEqualPowerGain:
    def test_examples(self):
        network = SensorNetwork(distances=[1.0, 1.0], sigma_v2=[1.0, 1.0])
        a = equal_power_gain(network, 1.0, 8.0)
        np.testing.assert_allclose(a.a, [math.sqrt(2), math.sqrt(2)])
        np.testing.assert_allclose(a.powers(build_D(network, 1.0)), [4.0, 4.0])
        assert a.constraint is ConstraintKind.EQUAL

        single = equal_power_gain(SensorNetwork(distances=[1.0], sigma_v2=[1.0]), 1.0, 2.0)
        np.testing.assert_allclose(single.a, [1.0])

    def test_uniform_power(self, network):
        a = equal_power_gain(network, 1.0, 300.0)
        powers = a.powers(build_D(network, 1.0))
        np.testing.assert_allclose(powers, 300.0 / network.n_sensors)
        assert a.total_power(build_D(network, 1.0)) == pytest.approx(300.0)


class TestOutageMatrix:
    def test_scalar_example(self):
        inst = unit_instance()
        assert inst.beta == pytest.approx(0.5)
        b, eigenvalues = outage_matrix(inst)
        np.testing.assert_allclose(b, [[0.5]])
        np.testing.assert_allclose(eigenvalues, [0.5])

    def test_rank_one_when_beta_vanishes(self, network):
        inst = OutageInstance(network=network, sigma_theta2=1.0, p_max=100.0, p_pred=1.0, epsilon=1.0)
        assert inst.beta == 0.0
        _, eigenvalues = outage_matrix(inst)
        assert eigenvalues[0] == pytest.approx(inst.signal_gain)
        np.testing.assert_allclose(eigenvalues[1:], 0.0, atol=1e-12 * inst.signal_gain)

    def test_at_most_one_positive_eigenvalue(self):
        for inst in random_outage_instances(41, 1000):
            _, eigenvalues = outage_matrix(inst)
            assert np.all(np.diff(eigenvalues) <= 0)
            scale = max(1.0, float(np.max(np.abs(eigenvalues))))
            assert np.count_nonzero(eigenvalues > 1e-12 * scale) <= 1


class TestWeylBounds:
    def test_beta_zero_collapses(self, network):
        inst = OutageInstance(network=network, sigma_theta2=1.0, p_max=100.0, p_pred=1.0, epsilon=1.0)
        bounds = weyl_bounds(inst)
        assert bounds[0] == pytest.approx((inst.signal_gain, inst.signal_gain))
        assert all(lo == 0.0 and hi == 0.0 for lo, hi in bounds[1:])

    def test_single_sensor(self):
        inst = unit_instance()
        _, eigenvalues = outage_matrix(inst)
        (lo, hi), = weyl_bounds(inst)
        # a single sensor pins the interval to one point
        assert hi - lo == pytest.approx(0.0, abs=1e-12)
        assert lo - 1e-10 <= eigenvalues[0] <= hi + 1e-10
        assert eigenvalues[0] == pytest.approx(0.5, abs=1e-12)

    def test_containment(self):
        for inst in random_outage_instances(43, 1000):
            _, eigenvalues = outage_matrix(inst)
            slack = 1e-10 * max(1.0, float(np.max(np.abs(eigenvalues))))
            for lam, (lo, hi) in zip(eigenvalues, weyl_bounds(inst)):
                assert lo - slack <= lam <= hi + slack


class TestOutageProbability:
    def test_single_sensor_closed_form(self):
        assert outage_probability(unit_instance()) == pytest.approx(1 - math.exp(-1), abs=1e-12)

    def test_certain_outage(self, rng):
        # beta sigma_v^2 >= 1: the SNR can never reach beta
        inst = unit_instance(epsilon=0.25)
        _, eigenvalues = outage_matrix(inst)
        assert eigenvalues[0] <= 0
        assert outage_probability(inst) == 1.0
        assert empirical_outage(inst, 10_000, rng) == 1.0

    def test_threshold_above_prediction(self, rng, network):
        inst = OutageInstance(network=network, sigma_theta2=1.0, p_max=10.0, p_pred=1.0, epsilon=1.5)
        assert not inst.outage_possible
        assert outage_probability(inst) == 0.0
        assert empirical_outage(inst, 5_000, rng) == 0.0

    def test_rejects_nonpositive_threshold(self, network):
        with pytest.raises(ValueError, match="epsilon"):
            OutageInstance(network=network, sigma_theta2=1.0, p_max=10.0, p_pred=1.0, epsilon=0.0)

    def test_degeneracy_detected(self, monkeypatch):
        inst = unit_instance()
        monkeypatch.setattr(
            outage, "outage_matrix", lambda _: (np.eye(3), np.array([1.0, 1.0, -0.5]))
        )
        with pytest.raises(EigenvalueDegeneracy):
            outage_probability(inst)

    def test_large_network_stays_finite(self):
        network = SensorNetwork(
            distances=np.linspace(2.0, 8.0, 60), sigma_v2=np.linspace(0.01, 0.5, 60)
        )
        inst = OutageInstance(network=network, sigma_theta2=1.0, p_max=3000.0, p_pred=1.0, epsilon=0.3)
        value = outage_probability(inst)
        assert 0.0 <= value <= 1.0

    def test_monotone_in_power_and_threshold(self, network):
        by_power = [
            outage_probability(
                OutageInstance(network=network, sigma_theta2=1.0, p_max=p, p_pred=1.0, epsilon=0.3)
            )
            for p in (1.0, 10.0, 100.0, 1000.0, 10000.0)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(by_power, by_power[1:]))

        by_threshold = [
            outage_probability(
                OutageInstance(network=network, sigma_theta2=1.0, p_max=300.0, p_pred=1.0, epsilon=eps)
            )
            for eps in (0.05, 0.1, 0.2, 0.4, 0.8)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(by_threshold, by_threshold[1:]))

    def test_matches_monte_carlo(self):
        gen = np.random.default_rng(47)
        network = SensorNetwork.draw(10, gen)
        trials = 100_000
        for index, p_max in enumerate((1.0, 10.0, 100.0, 1000.0, 10000.0)):
            inst = OutageInstance(network=network, sigma_theta2=1.0, p_max=p_max, p_pred=1.0, epsilon=0.3)
            theory = outage_probability(inst)
            empirical = empirical_outage(inst, trials, np.random.default_rng([47, index]))
            assert abs(empirical - theory) <= 4 * binomial_stderr(theory, trials) + 1e-4


class TestEmpiricalOutage:
    def test_event_routes_agree(self, rng, network):
        inst = OutageInstance(network=network, sigma_theta2=1.0, p_max=300.0, p_pred=1.0, epsilon=0.2)
        h_tilde = complex_normal(rng, 1.0, (20_000, network.n_sensors))
        np.testing.assert_array_equal(quadratic_form_events(inst, h_tilde), mse_events(inst, h_tilde))

    def test_independent_of_workers(self, network):
        inst = OutageInstance(network=network, sigma_theta2=1.0, p_max=30.0, p_pred=1.0, epsilon=0.3)
        serial = empirical_outage(inst, 25_000, np.random.default_rng(5))
        parallel = empirical_outage(inst, 25_000, np.random.default_rng(5), workers=3)
        assert serial == parallel

    def test_rejects_empty_trial_count(self, rng):
        with pytest.raises(ValueError, match="trials"):
            empirical_outage(unit_instance(), 0, rng)

    def test_binomial_stderr(self):
        assert binomial_stderr(0.5, 100) == pytest.approx(0.05)
        assert binomial_stderr(0.0, 100) == 0.0
