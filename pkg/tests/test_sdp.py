"""Tests for the interior-point SDP solver."""

import logging

import numpy as np
import pytest

from beamtrack.beamforming.indivpower import lift
from beamtrack.solvers import sdp
from beamtrack.solvers.sdp import SdpProblem, SdpSolution, SdpStatus
from beamtrack.model.system import SensorNetwork

from .instances import random_instances


def scalar_problem() -> SdpProblem:
    return SdpProblem(objective=np.array([[2.0]]), eq_lhs=np.array([[1.0]]))


class TestProblem:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            SdpProblem(objective=np.array([[0.0, 1.0], [0.0, 0.0]]), eq_lhs=np.eye(2))

    def test_rejects_indefinite_equality(self):
        with pytest.raises(ValueError, match="PSD"):
            SdpProblem(objective=np.eye(2), eq_lhs=np.diag([1.0, -1.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="shapes"):
            SdpProblem(objective=np.eye(2), eq_lhs=np.eye(3))

    def test_embedding_round_trip(self, rng):
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        herm = m + m.conj().T
        np.testing.assert_allclose(sdp.unembed(sdp.embed(herm)), herm)
        assert np.trace(sdp.embed(herm) @ sdp.embed(herm)) == pytest.approx(
            2 * np.trace(herm @ herm).real
        )


class TestSolve:
    def test_scalar_sdp(self):
        sol = sdp.solve(scalar_problem())
        assert sol.status is SdpStatus.OPTIMAL
        assert sol.a_matrix[0, 0].real == pytest.approx(1.0, abs=1e-8)
        assert sol.objective_value == pytest.approx(2.0, abs=1e-7)
        assert sol.dual_z == pytest.approx(2.0, abs=1e-6)

    def test_zero_objective(self):
        prob = SdpProblem(objective=np.zeros((2, 2)), eq_lhs=np.eye(2))
        sol = sdp.solve(prob)
        assert sol.is_optimal
        assert sol.objective_value == pytest.approx(0.0, abs=1e-8)

    def test_kkt_scalar_certificate(self):
        prob = scalar_problem()
        exact = SdpSolution(
            a_matrix=np.array([[1.0 + 0j]]),
            duals_y=np.zeros(0),
            dual_z=2.0,
            objective_value=2.0,
            status=SdpStatus.OPTIMAL,
            iterations=0,
        )
        residuals = sdp.kkt_check(prob, exact)
        assert residuals.primal == 0.0
        assert residuals.dual_min_eig == pytest.approx(0.0)
        assert residuals.complementarity == pytest.approx(0.0)

    def test_suboptimal_point_breaks_complementarity(self):
        network = SensorNetwork(distances=[1.0, 1.0], sigma_v2=[0.2, 0.3], sigma_w2=0.5)
        inst = lift(np.array([0.8, 0.3j]), network, 1.0, 2.0)
        prob = inst.to_sdp()
        optimum = sdp.solve(prob)
        assert optimum.is_optimal

        start = sdp.feasible_init(prob, inst)
        paired = SdpSolution(
            a_matrix=start,
            duals_y=optimum.duals_y,
            dual_z=optimum.dual_z,
            objective_value=float(np.trace(start @ prob.objective).real),
            status=SdpStatus.OPTIMAL,
            iterations=0,
        )
        assert sdp.kkt_check(prob, paired).complementarity > 1e-3

    def test_random_lifted_instances_certify(self):
        for network, ch in random_instances(21, 40, range(2, 7)):
            n = network.n_sensors
            inst = lift(ch.h, network, 1.0, 300.0 / n)
            prob = inst.to_sdp()
            sol = sdp.solve(
                prob,
                tol=1e-9,
                gap_tol=1e-9,
                primal_start=sdp.feasible_init(prob, inst),
                dual_start=sdp.feasible_dual_init(prob, inst),
            )
            assert sol.is_optimal
            residuals = sol.kkt_residuals
            assert residuals.primal <= 1e-7
            assert residuals.dual_min_eig >= -1e-7
            assert residuals.complementarity <= 1e-7 * (1 + abs(sol.objective_value))
            assert np.all(sol.duals_y >= 0)
            # weak duality
            assert sol.objective_value <= sol.dual_z + 1e-7 * (1 + abs(sol.dual_z))

    def test_iterates_stay_hermitian_psd(self):
        network = SensorNetwork(distances=[2.0, 3.0, 5.0], sigma_v2=[0.1, 0.2, 0.4])
        inst = lift(np.array([0.3 + 0.1j, -0.2j, 0.1]), network, 1.0, 100.0)
        sol = sdp.solve(inst.to_sdp())
        a = sol.a_matrix
        assert np.max(np.abs(a - a.conj().T)) <= 1e-12
        assert np.linalg.eigvalsh(a)[0] >= -1e-10

    def test_deterministic(self):
        network = SensorNetwork(distances=[2.0, 4.0], sigma_v2=[0.1, 0.3])
        prob = lift(np.array([0.4, 0.2 - 0.1j]), network, 1.0, 50.0).to_sdp()
        first, second = sdp.solve(prob), sdp.solve(prob)
        assert first.status is second.status
        assert first.iterations == second.iterations
        assert first.objective_value == second.objective_value

    def test_iteration_budget_exhausted(self):
        network = SensorNetwork(distances=[2.0, 4.0], sigma_v2=[0.1, 0.3])
        prob = lift(np.array([0.4, 0.2 - 0.1j]), network, 1.0, 50.0).to_sdp()
        sol = sdp.solve(prob, max_iter=2)
        assert sol.status is SdpStatus.MAX_ITERATIONS
        assert not sol.is_optimal

    def test_infeasible_equality(self):
        # tr(A) = 1 and tr(A) <= 0 cannot both hold for A >= 0
        prob = SdpProblem(objective=np.eye(2), eq_lhs=np.eye(2), ineq=[np.eye(2)])
        sol = sdp.solve(prob, max_iter=100)
        assert sol.status is SdpStatus.INFEASIBLE
        assert not sol.is_optimal

    def test_factorization_breakdown_has_its_own_status(self, monkeypatch):
        def broken(*args, **kwargs):
            raise np.linalg.LinAlgError("matrix is not positive definite")

        monkeypatch.setattr(sdp.scipy.linalg, "cho_factor", broken)
        sol = sdp.solve(scalar_problem())
        assert sol.status is SdpStatus.NUMERICAL_ERROR
        assert sol.iterations == 1
        assert not sol.is_optimal

    def test_iteration_log_reports_step_sizes(self, caplog):
        caplog.set_level(logging.DEBUG, logger="beamtrack.solvers.sdp")
        sdp.solve(scalar_problem())
        lines = [r.getMessage() for r in caplog.records if r.getMessage().startswith("sdp it=")]
        assert lines
        for line in lines:
            for key in ("pobj=", "dobj=", "gap=", "pres=", "dres=", "pstep=", "dstep="):
                assert key in line


class TestFeasibleStarts:
    def test_single_sensor_example(self):
        network = SensorNetwork(distances=[1.0], sigma_v2=[1.0], sigma_w2=1.0)
        inst = lift(np.array([1.0]), network, 1.0, 2.0)
        prob = inst.to_sdp()
        start = sdp.feasible_init(prob, inst)
        np.testing.assert_allclose(start, np.diag([1 / 3, 2 / 3]))
        assert np.trace(start @ prob.eq_lhs).real == pytest.approx(1.0, abs=1e-15)
        assert all(np.trace(start @ d).real < 0 for d in prob.ineq)

    def test_random_starts_strictly_feasible(self):
        for network, ch in random_instances(23, 50, range(1, 9)):
            inst = lift(ch.h, network, 1.0, 300.0 / network.n_sensors)
            prob = inst.to_sdp()
            start = sdp.feasible_init(prob, inst)
            assert np.trace(start @ prob.eq_lhs).real == pytest.approx(1.0, rel=1e-12)
            assert all(np.trace(start @ d).real < 0 for d in prob.ineq)
            assert np.linalg.eigvalsh(start)[0] > 0

            y, z = sdp.feasible_dual_init(prob, inst)
            assert np.all(y > 0)
            assert np.linalg.eigvalsh(sdp.dual_slack(prob, y, z))[0] > 0
