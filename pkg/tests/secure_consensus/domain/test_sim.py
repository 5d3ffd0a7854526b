from dataclasses import replace
from unittest.mock import Mock

import numpy as np
import pytest

from secure_consensus.domain.graph import AgentOutOfRangeException
from secure_consensus.domain.graph import WeightMatrix
from secure_consensus.domain.graph import build_graph
from secure_consensus.domain.graph import metropolis_weights
from secure_consensus.domain.scenario_validator import ScenarioValidator
from secure_consensus.domain.scenario_validator import ScenarioValidatorError
from secure_consensus.domain.sim import AttackProfile
from secure_consensus.domain.sim import AttackProfileException
from secure_consensus.domain.sim import ConstantSignal
from secure_consensus.domain.sim import DimensionMismatchException
from secure_consensus.domain.sim import GeometricSignal
from secure_consensus.domain.sim import NoiseOrderException
from secure_consensus.domain.sim import NoiseProcess
from secure_consensus.domain.sim import Scenario
from secure_consensus.domain.sim import SequenceSignal
from secure_consensus.domain.sim import ZeroSignal
from secure_consensus.domain.sim import attack_signal
from secure_consensus.domain.sim import attacker_matrix
from secure_consensus.domain.sim import measurement_matrix
from secure_consensus.domain.sim import noise_step
from secure_consensus.domain.sim import run
from secure_consensus.domain.sim import step
from secure_consensus.domain.sim import zero_noise_replay
from secure_consensus.providers.validation import ValidationException


class TestNoiseProcess:
    def test_first_step_is_the_raw_draw(self):
        proc = NoiseProcess(0.2, 4, seed=5)

        w0 = noise_step(proc, 0)

        np.testing.assert_array_equal(w0, proc.v_prev)

    def test_noise_telescopes(self):
        proc = NoiseProcess(0.5, 3, seed=1)
        draws = []
        total = np.zeros(3)
        for k in range(30):
            total += proc.step(k)
            draws.append(proc.v_prev)

        np.testing.assert_allclose(total, 0.5**29 * draws[-1], atol=1e-13)

    def test_steps_must_be_requested_in_order(self):
        proc = NoiseProcess(0.2, 2, seed=0)
        proc.step(0)

        with pytest.raises(NoiseOrderException):
            proc.step(2)

    def test_same_seed_and_trial_reproduce(self):
        first = NoiseProcess(0.2, 4, seed=9, trial=3)
        second = NoiseProcess(0.2, 4, seed=9, trial=3)
        other = NoiseProcess(0.2, 4, seed=9, trial=4)

        a, b, c = first.step(0), second.step(0), other.step(0)

        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_zero_noise_is_exactly_zero(self):
        proc = NoiseProcess(0.2, 4, seed=9, zero_noise=True)

        for k in range(5):
            assert not np.any(proc.step(k))

    def test_excluded_agents_add_no_noise(self):
        proc = NoiseProcess(0.2, 4, seed=9, excluded_agents=(3,))

        for k in range(5):
            assert proc.step(k)[2] == 0.0

    @pytest.mark.parametrize("phi", [0.0, 1.0, -0.5])
    def test_phi_outside_the_unit_interval_raises(self, phi):
        with pytest.raises(ValidationException):
            NoiseProcess(phi, 4, seed=0)


class TestSignals:
    def test_geometric_signal(self):
        signal = GeometricSignal(-24.0, 0.2)

        assert signal.value(0) == -24.0
        assert signal.value(2) == pytest.approx(-0.96)
        assert signal.total() == pytest.approx(-30.0)
        assert signal.summable

    def test_non_summable_signals(self):
        assert not ConstantSignal(1.0).summable
        assert ConstantSignal(-2.0).total() == -np.inf
        assert np.isnan(GeometricSignal(1.0, 1.5).total())

    def test_sequence_signal_is_zero_after_its_values(self):
        signal = SequenceSignal((1.0, -2.0, 0.5))

        assert [signal.value(k) for k in range(5)] == [1.0, -2.0, 0.5, 0.0, 0.0]
        assert signal.total() == pytest.approx(-0.5)

    def test_zero_signal(self):
        assert ZeroSignal().value(10) == 0.0
        assert ZeroSignal().total() == 0.0


class TestAttackProfile:
    def test_input_matrix_selects_attackers(self):
        profile = AttackProfile((3, 1), (ZeroSignal(), ConstantSignal(2.0)))

        B = profile.input_matrix(4)

        assert B.shape == (4, 2)
        assert B[2, 0] == 1.0
        assert B[0, 1] == 1.0
        assert B.sum() == 2.0
        np.testing.assert_array_equal(attack_signal(profile, 7), [0.0, 2.0])

    def test_duplicate_attackers_raise(self):
        with pytest.raises(AttackProfileException):
            AttackProfile((2, 2), (ZeroSignal(), ZeroSignal()))

    def test_signal_count_must_match(self):
        with pytest.raises(AttackProfileException):
            AttackProfile((2,), ())

    def test_attacker_out_of_range_raises(self):
        with pytest.raises(AgentOutOfRangeException):
            attacker_matrix(3, (4,))

    def test_silenced_profile_keeps_attackers(self):
        profile = AttackProfile((2,), (ConstantSignal(5.0),)).silenced()

        assert profile.attackers == (2,)
        assert profile.summable
        assert profile.total().tolist() == [0.0]


class TestMeasurementAndStep:
    def test_measurement_matrix_orders_self_then_neighbours(self, ring_graph):
        C = measurement_matrix(ring_graph, 1)

        expected = np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
        np.testing.assert_array_equal(C, expected)

    def test_step(self, ring_weights):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        w = np.zeros(4)
        B = attacker_matrix(4, (2,))

        x_next = step(x, ring_weights.A, w, B, np.array([1.0]))

        np.testing.assert_allclose(x_next, ring_weights.A @ x + np.array([0.0, 1.0, 0.0, 0.0]))

    def test_step_dimension_mismatch(self, ring_weights):
        with pytest.raises(DimensionMismatchException):
            step(np.zeros(3), ring_weights.A, np.zeros(3), np.zeros((3, 0)), np.zeros(0))


class TestRun:
    @pytest.mark.parametrize("seed", [0, 1, 20240501])
    def test_ring_attack_converges_to_minus_seven_and_a_half(self, ring_scenario, seed):
        trace = run(replace(ring_scenario, seed=seed))

        assert trace.horizon == 200
        np.testing.assert_allclose(trace.x[-1], -7.5, atol=1e-3)

    def test_trace_satisfies_the_recursions(self, ring_scenario):
        trace = run(ring_scenario)

        assert trace.verify(ring_scenario.weights.A) <= 1e-9
        assert trace.measurements[1].shape == (201, 3)
        assert trace.u.shape == (201, 1)
        assert trace.u[1, 0] == pytest.approx(-4.8)

    def test_run_is_deterministic(self, ring_scenario):
        first = run(ring_scenario)
        second = run(ring_scenario)

        assert first.to_csv() == second.to_csv()

    def test_horizon_zero_records_only_the_initial_state(self, ring_scenario):
        trace = run(replace(ring_scenario, horizon=0))

        assert trace.x.shape == (1, 4)
        np.testing.assert_array_equal(trace.x[0], ring_scenario.x0)

    def test_zero_noise_without_attack_is_plain_consensus(self, ring_scenario):
        scenario = replace(ring_scenario, attack=AttackProfile(), horizon=10)

        trace = zero_noise_replay(scenario)

        assert not np.any(trace.w)
        A = scenario.weights.A
        np.testing.assert_allclose(
            trace.x[10], np.linalg.matrix_power(A, 10) @ scenario.x0, atol=1e-10
        )

    def test_attackers_can_be_excluded_from_noise(self, ring_scenario):
        trace = run(replace(ring_scenario, attackers_add_noise=False, horizon=5))

        assert not np.any(trace.w[:, 2])
        assert np.any(trace.w[:, 0])

    def test_invalid_scenario_is_rejected(self):
        g = build_graph(3, [(1, 2), (2, 3)])
        scenario = Scenario(
            graph=g,
            weights=WeightMatrix(np.eye(3)),
            x0=np.zeros(3),
            phi=0.2,
            seed=0,
            horizon=3,
        )

        with pytest.raises(ScenarioValidatorError) as err:
            run(scenario)

        assert "assumption A1" in str(err.value)

    def test_non_summable_attack_warns(self):
        g = build_graph(2, [(1, 2)])
        validator_io = Mock()
        scenario = Scenario(
            graph=g,
            weights=metropolis_weights(g),
            x0=np.ones(2),
            phi=0.2,
            seed=0,
            attack=AttackProfile((2,), (ConstantSignal(1.0),)),
            horizon=3,
        )

        ScenarioValidator(io=validator_io).run_validations(scenario)

        validator_io.warn.assert_called_once()


class TestTraceCsv:
    def test_csv_layout(self, ring_scenario):
        trace = run(replace(ring_scenario, horizon=2))

        lines = trace.to_csv().splitlines()

        assert lines[0] == "step,agent,x,w,u,y_detector_1"
        assert len(lines) == 1 + 3 * 4
        assert lines[1].startswith("0,1,100,")
        # agent 3 is not observed by detector 1
        assert lines[3].endswith(",")
