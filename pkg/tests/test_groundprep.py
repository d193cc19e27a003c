import numpy as np
import pytest

from modules.blockenc.encoding import Direction, OracleTag, QueryCost, QueryLedger
from modules.blockenc.reflector import make_projector
from modules.exceptions import AmplificationError, ContractViolation
from modules.groundprep.amplification import (
    FlaggedCircuit,
    amplified_probability,
    amplitude_amplify,
    deterministic_iterations,
    estimate_raw_success,
)
from modules.groundprep.preparer import (
    PrepProblem,
    fidelity_bound_chain,
    flagged_projection,
    prepare_low_energy,
    prepare_with_bound,
)
from modules.hamlib.benchmarks import make_random_gapless
from modules.linalg import state_preparation_unitary


def flagged_circuit(amplitude):
    """One ancilla over one system qubit with ``a|0⟩|0⟩ + √(1−a²)|1⟩|0⟩``."""
    v = np.array([amplitude, 0.0, np.sqrt(1.0 - amplitude**2), 0.0], dtype=complex)
    return FlaggedCircuit(
        unitary=state_preparation_unitary(v), good_dim=2, cost=QueryCost.single(OracleTag.U_I)
    )


class TestIterationCounts:
    def test_half_amplitude_needs_one_step(self):
        assert deterministic_iterations(0.5) == 1
        assert amplified_probability(0.5, 1) == pytest.approx(1.0)

    def test_small_amplitude(self):
        k = deterministic_iterations(0.01)
        assert k == int(np.floor(np.pi / (4.0 * np.arcsin(0.01))))
        assert amplified_probability(0.01, k) >= 1.0 - 1e-3

    def test_zero_amplitude(self):
        with pytest.raises(AmplificationError):
            deterministic_iterations(0.0)


class TestFlaggedCircuit:
    @pytest.mark.parametrize("k", [0, 1, 2, 5])
    def test_iterate_rotates_by_twice_theta(self, k):
        circuit = flagged_circuit(0.2)
        assert circuit.amplitude == pytest.approx(0.2)
        state = circuit.iterate(k)
        assert np.linalg.norm(state) == pytest.approx(1.0)
        assert circuit.flagged_probability(state) == pytest.approx(
            amplified_probability(0.2, k), abs=1e-12
        )

    def test_good_dim_must_divide_register(self):
        with pytest.raises(ContractViolation):
            FlaggedCircuit(unitary=np.eye(4, dtype=complex), good_dim=3)

    def test_raw_success_frequency(self, rng):
        shots = 10_000
        frequency = estimate_raw_success(flagged_circuit(0.5), shots, rng)
        assert abs(frequency - 0.25) <= 3.0 * np.sqrt(0.25 * 0.75 / shots)

    def test_raw_success_needs_shots(self, rng):
        with pytest.raises(ContractViolation):
            estimate_raw_success(flagged_circuit(0.5), 0, rng)


class TestAmplify:
    def test_deterministic_mode_ledger(self, rng):
        result = amplitude_amplify(flagged_circuit(0.5), rng, known_amplitude=0.5)
        assert result.rounds == 1
        assert result.iterations == 1
        assert result.success_probability == pytest.approx(1.0)
        assert result.ledger.count(OracleTag.U_I, Direction.FORWARD) == 2
        assert result.ledger.count(OracleTag.U_I, Direction.INVERSE) == 1
        assert abs(result.state[0]) == pytest.approx(1.0)

    def test_schedule_mode_ledger(self, rng):
        result = amplitude_amplify(flagged_circuit(0.1), rng, amplitude_floor=0.05)
        assert abs(result.state[0]) == pytest.approx(1.0)
        forward = result.ledger.count(OracleTag.U_I, Direction.FORWARD)
        assert forward == result.rounds + result.iterations
        assert result.ledger.count(OracleTag.U_I, Direction.INVERSE) == result.iterations

    def test_schedule_mean_iterations(self):
        circuit = flagged_circuit(0.1)
        iterations = [
            amplitude_amplify(circuit, seed, amplitude_floor=0.1).iterations for seed in range(200)
        ]
        assert np.mean(iterations) <= 4.0 / 0.1

    def test_iteration_charges_reflector_twice(self):
        reflector = QueryCost.single(OracleTag.U_H).scaled(3)
        circuit = FlaggedCircuit(unitary=flagged_circuit(0.1).unitary, good_dim=2,
                                 cost=QueryCost.single(OracleTag.U_I), reflection_cost=reflector)
        before, after = QueryLedger(), QueryLedger()
        circuit.record(before, 0)
        circuit.record(after, 1)
        assert after.total(OracleTag.U_H) - before.total(OracleTag.U_H) == 2 * 3
        assert after.total(OracleTag.U_I) - before.total(OracleTag.U_I) == 2

    def test_known_amplitude_ledger_includes_reflector(self, rng):
        circuit = FlaggedCircuit(unitary=flagged_circuit(0.1).unitary, good_dim=2,
                                 cost=QueryCost.single(OracleTag.U_I),
                                 reflection_cost=QueryCost.single(OracleTag.U_H))
        result = amplitude_amplify(circuit, rng, known_amplitude=0.1)
        assert result.iterations == 7 * result.rounds
        assert result.ledger.count(OracleTag.U_H, Direction.FORWARD) == result.iterations
        assert result.ledger.count(OracleTag.U_H, Direction.INVERSE) == result.iterations
        assert result.ledger.count(OracleTag.U_I, Direction.FORWARD) == (
            result.rounds + result.iterations
        )

    def test_gives_up_without_flagged_amplitude(self, rng):
        with pytest.raises(AmplificationError) as info:
            amplitude_amplify(flagged_circuit(0.0), rng, max_rounds=3)
        assert info.value.attempts == 3


MU = 0.7
DELTA_GAP = 0.6


@pytest.fixture
def bound_problem(single_qubit):
    return PrepProblem.from_instance(single_qubit, gamma=0.7, eps=1e-3, mu=MU,
                                     delta_gap=DELTA_GAP)


class TestPrepareWithBound:
    def test_default_bound_sits_mid_gap(self, single_qubit):
        problem = PrepProblem.from_instance(single_qubit)
        assert problem.mu == pytest.approx(MU)
        assert problem.delta_gap == pytest.approx(DELTA_GAP)
        assert problem.gamma == pytest.approx(1.0 / np.sqrt(2.0))

    @pytest.mark.parametrize("deterministic", [True, False])
    def test_fidelity_guarantee(self, bound_problem, rng, deterministic):
        result = prepare_with_bound(bound_problem, rng, deterministic=deterministic)
        assert result.fidelity >= 1.0 - bound_problem.eps
        assert result.success_probability >= (0.7 * (1.0 - 5e-4)) ** 2
        assert result.energy == pytest.approx(0.4, abs=1e-2)
        assert result.params["delta"] == pytest.approx(DELTA_GAP / (4.0 * 1.7))

    def test_ledger_follows_amplification(self, bound_problem, rng):
        result = prepare_with_bound(bound_problem, rng)
        per_run = result.params["degree"]
        # A, A†, REF and REF† per iteration on top of one A per round
        total_runs = result.rounds + 4 * result.iterations
        assert result.ledger.total(OracleTag.U_H) == per_run * total_runs
        assert result.ledger.count(OracleTag.U_I, Direction.INVERSE) == result.iterations

    def test_fidelity_chain(self, single_qubit, bound_problem):
        delta = DELTA_GAP / (4.0 * 1.7)
        projector = make_projector(single_qubit.encoding, MU, delta, 0.7e-3)
        chain = fidelity_bound_chain(single_qubit, projector, 0.7, 1e-3)
        assert chain.holds()
        assert chain.floor == pytest.approx(1.0 - 1e-3)

    def test_flagged_projection_amplitude(self, single_qubit):
        projector = make_projector(single_qubit.encoding, MU, 0.088, 1e-3)
        circuit = flagged_projection(projector, single_qubit.state_prep)
        assert circuit.amplitude == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-3)
        assert circuit.good_dim == 2
        assert circuit.reflection_cost.total(OracleTag.U_H) == projector.info["degree"]
        assert circuit.cost.total(OracleTag.U_H) == projector.info["degree"]

    def test_needs_bound(self, single_qubit, rng):
        problem = PrepProblem(encoding=single_qubit.encoding,
                              state_prep=single_qubit.state_prep, gamma=0.7, eps=1e-3)
        with pytest.raises(ContractViolation):
            prepare_with_bound(problem, rng)

    @pytest.mark.parametrize(
        "gamma, eps, delta_gap", [(0.0, 1e-3, 0.6), (0.7, 1.0, 0.6), (0.7, 1e-3, -0.1)]
    )
    def test_problem_validation(self, single_qubit, gamma, eps, delta_gap):
        with pytest.raises(ContractViolation):
            PrepProblem(encoding=single_qubit.encoding, state_prep=single_qubit.state_prep,
                        gamma=gamma, eps=eps, delta_gap=delta_gap, mu=MU)


class TestLowEnergy:
    @pytest.mark.parametrize("degeneracy", [1, 2])
    def test_energy_below_threshold(self, degeneracy):
        instance = make_random_gapless(3, 0.5, 314, degeneracy=degeneracy)
        problem = PrepProblem(encoding=instance.encoding, state_prep=instance.state_prep,
                              gamma=0.5, eps=1e-3, truth=instance)
        delta = 0.05
        mu = instance.ground_energy + 3.0 * delta + 0.01
        result = prepare_low_energy(problem, mu, delta, 2718)
        assert result.energy <= mu
        assert result.energy <= result.params["energy_bound"] + 1e-9
        assert result.params["eps_prime"] == pytest.approx(0.25 * delta / 8.0)

    def test_resolution_must_be_positive(self, single_qubit, rng):
        problem = PrepProblem.from_instance(single_qubit)
        with pytest.raises(ContractViolation):
            prepare_low_energy(problem, 0.5, 0.0, rng)
