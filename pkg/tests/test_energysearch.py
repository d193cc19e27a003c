import numpy as np
import pytest

from cli.models import AeMode
from modules.blockenc.encoding import Direction, OracleTag, QueryCost, QueryLedger
from modules.energysearch.estimator import (
    AeConfig,
    binary_amplitude_estimate,
    circuit_distribution,
    evaluation_points,
    fejer_distribution,
    vote_repetitions,
)
from modules.energysearch.search import (
    EnergyGrid,
    GroundEnergySearch,
    ensemble_fidelity,
    locate_ground_energy,
    mixed_state_floor,
    prepare_without_bound,
    probe_grid_point,
)
from modules.exceptions import ContractViolation
from modules.groundprep.amplification import FlaggedCircuit
from modules.hamlib.benchmarks import make_counting, make_random_gapped
from modules.linalg import state_preparation_unitary


def flagged_circuit(amplitude):
    v = np.array([amplitude, 0.0, np.sqrt(1.0 - amplitude**2), 0.0], dtype=complex)
    return FlaggedCircuit(
        unitary=state_preparation_unitary(v), good_dim=2, cost=QueryCost.single(OracleTag.U_I)
    )


def threshold_source(ground_energy, h, gamma, adversary):
    """Amplitudes that honour the probe promise outside ``(x_{k−1}, x_{k+1})``."""

    def source(k, x):
        if ground_energy <= x - h:
            return gamma
        if ground_energy >= x + h:
            return 0.0
        return adversary(k)

    return source


class TestParameters:
    def test_evaluation_points(self):
        assert evaluation_points(0.25) == 64
        assert evaluation_points(4.0 * np.pi) == 1
        with pytest.raises(ContractViolation):
            evaluation_points(0.0)

    def test_vote_repetitions(self):
        assert vote_repetitions(0.05) == 54
        with pytest.raises(ContractViolation):
            vote_repetitions(1.0)

    def test_vote_constant_is_configurable(self, override_settings):
        override_settings(AE_VOTE_CONSTANT=1.0)
        assert vote_repetitions(0.05) == 3

    def test_search_settings(self):
        cfg = AeConfig.for_search(AeMode.STATISTICAL_MODEL, 0.4, 1.0, 0.02, 0.1)
        assert cfg.gap == pytest.approx(0.2)
        assert cfg.delta == pytest.approx(0.1 / (2.0 * np.log2(200.0)))
        assert cfg.points == evaluation_points(0.2)

    def test_halving_gamma_doubles_evaluation_points(self):
        wide = AeConfig.for_search(AeMode.ORACLE_THRESHOLD, 0.4, 1.0, 0.02, 0.1)
        narrow = AeConfig.for_search(AeMode.ORACLE_THRESHOLD, 0.2, 1.0, 0.02, 0.1)
        assert narrow.points == 2 * wide.points
        assert narrow.repetitions == wide.repetitions


class TestPhaseEstimationDistribution:
    def test_zero_amplitude_is_a_point_mass(self):
        distribution = fejer_distribution(0.0, 32)
        assert distribution[0] == pytest.approx(1.0)

    def test_normalized(self):
        assert fejer_distribution(0.37, 64).sum() == pytest.approx(1.0)

    def test_nearest_outcomes_carry_most_weight(self):
        M, amplitude = 64, 0.3
        distribution = fejer_distribution(amplitude, M)
        estimates = np.sin(np.pi * np.arange(M) / M)
        close = np.abs(estimates - amplitude) <= np.pi / M
        assert distribution[close].sum() >= 8.0 / np.pi**2

    @pytest.mark.parametrize("amplitude", [0.1, 0.3, 0.77])
    def test_circuit_matches_closed_form(self, amplitude):
        circuit = flagged_circuit(amplitude)
        assert np.allclose(circuit_distribution(circuit, 32), fejer_distribution(amplitude, 32),
                           atol=1e-9)


class TestBinaryEstimate:
    cfg = AeConfig.create(AeMode.STATISTICAL_MODEL, gap=0.2, delta=0.05)

    def test_single_estimate_is_usually_right(self, rng):
        cfg = AeConfig.create(AeMode.STATISTICAL_MODEL, gap=0.2, delta=0.05, repetitions=1)
        trials = 1000
        right = sum(
            binary_amplitude_estimate(None, 0.2, 0.4, cfg, rng, amplitude=0.1).bit == 0
            for _ in range(trials)
        )
        p = 8.0 / np.pi**2
        assert right / trials >= p - 3.0 * np.sqrt(p * (1.0 - p) / trials)

    @pytest.mark.parametrize("amplitude, expected", [(0.1, 0), (0.5, 1)])
    def test_majority_vote_failure_rate(self, rng, amplitude, expected):
        trials = 1000
        wrong = sum(
            binary_amplitude_estimate(None, 0.2, 0.4, self.cfg, rng, amplitude=amplitude).bit
            != expected
            for _ in range(trials)
        )
        delta = self.cfg.delta
        assert wrong / trials <= delta + 3.0 * np.sqrt(delta * (1.0 - delta) / trials)

    @pytest.mark.parametrize("mode", [AeMode.STATISTICAL_MODEL, AeMode.CIRCUIT_QPE])
    def test_ledger_counts_forward_and_inverse(self, rng, mode):
        cfg = AeConfig.create(mode, gap=0.2, delta=0.05)
        ledger = QueryLedger()
        binary_amplitude_estimate(flagged_circuit(0.1), 0.2, 0.4, cfg, rng, ledger)
        M, r = cfg.points, cfg.repetitions
        assert ledger.count(OracleTag.U_I, Direction.FORWARD) == M * r
        assert ledger.count(OracleTag.U_I, Direction.INVERSE) == (M - 1) * r

    @pytest.mark.parametrize("mode", [AeMode.STATISTICAL_MODEL, AeMode.CIRCUIT_QPE])
    def test_ledger_scales_with_circuit_cost(self, rng, mode):
        cfg = AeConfig.create(mode, gap=0.2, delta=0.05)
        circuit = flagged_circuit(0.5)
        circuit = FlaggedCircuit(
            unitary=circuit.unitary,
            good_dim=circuit.good_dim,
            cost=QueryCost.single(OracleTag.U_H).scaled(3) + QueryCost.single(OracleTag.U_I),
        )
        ledger = QueryLedger()
        binary_amplitude_estimate(circuit, 0.2, 0.4, cfg, rng, ledger)
        M, r = cfg.points, cfg.repetitions
        assert ledger.count(OracleTag.U_H, Direction.FORWARD) == 3 * M * r
        assert ledger.count(OracleTag.U_H, Direction.INVERSE) == 3 * (M - 1) * r
        assert ledger.count(OracleTag.U_I, Direction.FORWARD) == M * r
        assert ledger.count(OracleTag.U_I, Direction.INVERSE) == (M - 1) * r

    @pytest.mark.parametrize("amplitude, expected", [(0.1, 0), (0.5, 1)])
    def test_circuit_mode(self, rng, amplitude, expected):
        cfg = AeConfig.create(AeMode.CIRCUIT_QPE, gap=0.2, delta=0.05)
        outcome = binary_amplitude_estimate(flagged_circuit(amplitude), 0.2, 0.4, cfg, rng)
        assert outcome.bit == expected
        assert len(outcome.estimates) == cfg.repetitions

    def test_circuit_mode_register_limit(self, rng, override_settings):
        override_settings(CIRCUIT_QPE_MAX_QUBITS=0)
        cfg = AeConfig.create(AeMode.CIRCUIT_QPE, gap=0.2, delta=0.05)
        with pytest.raises(ContractViolation):
            binary_amplitude_estimate(flagged_circuit(0.1), 0.2, 0.4, cfg, rng)

    def test_oracle_mode_flags_broken_promise(self, rng):
        cfg = AeConfig.create(AeMode.ORACLE_THRESHOLD, gap=0.2, delta=0.05)
        outcome = binary_amplitude_estimate(None, 0.2, 0.4, cfg, rng, amplitude=0.35)
        assert outcome.ambiguous
        assert outcome.bit == 1

    def test_threshold_order(self, rng):
        with pytest.raises(ContractViolation):
            binary_amplitude_estimate(None, 0.4, 0.2, self.cfg, rng, amplitude=0.1)
        with pytest.raises(ContractViolation):
            binary_amplitude_estimate(None, 0.2, 0.4, self.cfg, rng)


class TestEnergyGrid:
    def test_points(self):
        grid = EnergyGrid(alpha=1.0, h=2.0 / 64)
        assert grid.size == 64
        assert grid.point(0) == pytest.approx(-1.0)
        assert grid.points[-1] == pytest.approx(1.0)
        assert grid.max_iterations() == 8

    def test_shift_moves_origin(self):
        grid = EnergyGrid(alpha=1.0, h=0.1, shift=0.03)
        assert grid.point(0) == pytest.approx(-1.03)
        assert grid.points[-1] >= 1.0

    @pytest.mark.parametrize("h, shift", [(0.0, 0.0), (0.1, 0.1), (2.5, 0.0)])
    def test_validation(self, h, shift):
        with pytest.raises(ContractViolation):
            EnergyGrid(alpha=1.0, h=h, shift=shift)


GAMMA = 0.7


class TestDecisionTable:
    @pytest.mark.parametrize("adversary", ["high", "low", "random"])
    def test_bracket_holds_ground_energy_at_every_midpoint(self, single_qubit, adversary):
        h = 2.0 / 64
        grid = EnergyGrid(alpha=1.0, h=h)
        rng = np.random.default_rng(5)
        choices = {
            "high": lambda k: GAMMA,
            "low": lambda k: 0.0,
            "random": lambda k: float(rng.uniform(0.0, GAMMA)),
        }
        for j in range(grid.size):
            ground_energy = grid.point(j) + h / 2.0
            search = GroundEnergySearch(
                single_qubit.encoding, single_qubit.state_prep, GAMMA, h, 0.1,
                ae_mode=AeMode.ORACLE_THRESHOLD,
                amplitude_source=threshold_source(ground_energy, h, GAMMA, choices[adversary]),
            )
            bracket = search.run(rng)
            assert bracket.contains(ground_energy)
            assert bracket.upper - bracket.lower <= 3
            assert bracket.iterations <= 6
            widths = bracket.widths
            for step, (before, after) in enumerate(zip(widths, widths[1:]), start=1):
                assert after <= before / 2.0 + 1.0
                assert after <= (grid.size - 2) / 2.0**step + 2.0

    def test_external_amplitudes_record_state_preparation_only(self, single_qubit, rng):
        h = 2.0 / 64
        search = GroundEnergySearch(
            single_qubit.encoding, single_qubit.state_prep, GAMMA, h, 0.1,
            ae_mode=AeMode.STATISTICAL_MODEL,
            amplitude_source=threshold_source(0.123, h, GAMMA, lambda k: GAMMA),
        )
        bracket = search.run(rng)
        M, r = search.cfg.points, search.cfg.repetitions
        assert bracket.contains(0.123)
        forward = bracket.ledger.count(OracleTag.U_I, Direction.FORWARD)
        assert forward == 2 * bracket.iterations * M * r
        assert bracket.ledger.count(OracleTag.U_I, Direction.INVERSE) == (
            2 * bracket.iterations * (M - 1) * r
        )
        assert bracket.ledger.total(OracleTag.U_H) == 0

    def test_state_preparation_count_scaling(self, single_qubit):
        def count(gamma, h):
            search = GroundEnergySearch(
                single_qubit.encoding, single_qubit.state_prep, gamma, h, 0.1,
                ae_mode=AeMode.ORACLE_THRESHOLD,
                amplitude_source=threshold_source(0.123, h, gamma, lambda k: gamma),
            )
            return search.run(0).ledger.count(OracleTag.U_I, Direction.FORWARD)

        base = count(0.4, 0.02)
        assert count(0.2, 0.02) == 2 * base
        assert base <= count(0.4, 0.01) <= 2 * base

    def test_circuit_mode_needs_circuits(self, single_qubit):
        with pytest.raises(ContractViolation):
            GroundEnergySearch(
                single_qubit.encoding, single_qubit.state_prep, GAMMA, 0.1, 0.1,
                ae_mode=AeMode.CIRCUIT_QPE, amplitude_source=lambda k, x: 0.0,
            )

    @pytest.mark.parametrize("gamma, vartheta", [(0.0, 0.1), (1.2, 0.1), (0.5, 1.0)])
    def test_promise_validation(self, single_qubit, gamma, vartheta):
        with pytest.raises(ContractViolation):
            GroundEnergySearch(single_qubit.encoding, single_qubit.state_prep, gamma, 0.1,
                               vartheta)


H_SPACING = 0.1
# keeps the ground energy 0.4 off the grid
SHIFT = H_SPACING / 7.0


class TestProbes:
    @pytest.fixture
    def grid(self):
        return EnergyGrid(alpha=1.0, h=H_SPACING, shift=SHIFT)

    @pytest.fixture
    def cfg(self):
        return AeConfig.for_search(AeMode.STATISTICAL_MODEL, GAMMA, 1.0, H_SPACING, 0.1)

    def test_bits_on_either_side(self, single_qubit, grid, cfg, rng):
        encoding, prep = single_qubit.encoding, single_qubit.state_prep
        assert probe_grid_point(encoding, prep, 16, grid, GAMMA, cfg, rng) == 1
        assert probe_grid_point(encoding, prep, 13, grid, GAMMA, cfg, rng) == 0

    def test_index_range(self, single_qubit, grid, cfg, rng):
        with pytest.raises(ContractViolation):
            probe_grid_point(single_qubit.encoding, single_qubit.state_prep, grid.size + 1,
                             grid, GAMMA, cfg, rng)

    def test_search_on_circuits(self, single_qubit, rng):
        bracket = locate_ground_energy(
            single_qubit.encoding, single_qubit.state_prep, H_SPACING, GAMMA, 0.1, rng,
            shift=SHIFT,
        )
        assert bracket.contains(0.4)
        assert bracket.width <= 3.0 * H_SPACING + 1e-12
        payload = bracket.to_json()
        assert payload["indices"] == [bracket.lower, bracket.upper]
        assert len(payload["trace"]) == bracket.iterations
        M, r = bracket.params["evaluation_points"], bracket.params["repetitions"]
        forward = bracket.ledger.count(OracleTag.U_I, Direction.FORWARD)
        assert forward == 2 * bracket.iterations * M * r

    def test_counting_ground_energy(self, rng):
        instance = make_counting(4, [0])
        h = 0.05
        bracket = locate_ground_energy(instance.encoding, instance.state_prep, h, 0.8, 0.1, rng)
        assert instance.ground_energy == pytest.approx(-np.sqrt(15.0) / 8.0)
        assert bracket.contains(instance.ground_energy)
        assert bracket.width <= 3.0 * h + 1e-12

    def test_prepare_without_bound(self, single_qubit, rng):
        result = prepare_without_bound(
            single_qubit.encoding, single_qubit.state_prep, GAMMA, 0.6, 1e-3, 0.1, rng,
            truth=single_qubit, shift=SHIFT,
        )
        low, high = result.params["bracket"]
        assert low < 0.4 < high
        assert result.params["h"] == pytest.approx(0.1)
        assert result.fidelity >= 1.0 - 1e-3

    def test_reused_search_matches_fresh_search(self, single_qubit):
        search = GroundEnergySearch.from_instance(single_qubit, GAMMA, 0.1, 0.1, shift=SHIFT)
        args = (single_qubit.encoding, single_qubit.state_prep, GAMMA, 0.6, 1e-3, 0.1, 5)
        fresh = prepare_without_bound(*args, truth=single_qubit, shift=SHIFT)
        reused = prepare_without_bound(*args, truth=single_qubit, search=search)
        assert reused.params["bracket"] == fresh.params["bracket"]
        assert reused.fidelity == pytest.approx(fresh.fidelity)
        assert reused.ledger.to_json() == fresh.ledger.to_json()

    def test_reused_search_needs_matching_spacing(self, single_qubit, rng):
        search = GroundEnergySearch.from_instance(single_qubit, GAMMA, 0.05, 0.1)
        with pytest.raises(ContractViolation):
            prepare_without_bound(single_qubit.encoding, single_qubit.state_prep, GAMMA, 0.6,
                                  1e-3, 0.1, rng, search=search)

    def test_prepare_without_bound_needs_gap(self, single_qubit, rng):
        with pytest.raises(ContractViolation):
            prepare_without_bound(single_qubit.encoding, single_qubit.state_prep, GAMMA, 0.0,
                                  1e-3, 0.1, rng)


class TestEnsemble:
    def test_floor(self):
        assert mixed_state_floor(0.1, 0.01) == pytest.approx(0.9 * 0.99**2)

    def test_ensemble_fidelity(self, single_qubit):
        states = [single_qubit.ground_state, single_qubit.eigenvectors[:, 1]]
        assert ensemble_fidelity(states, single_qubit) == pytest.approx(0.5)
        with pytest.raises(ContractViolation):
            ensemble_fidelity([], single_qubit)


@pytest.mark.slow
class TestRepeatedRuns:
    def test_success_rate_on_single_qubit(self, single_qubit):
        h, vartheta = 0.05, 0.1
        search = GroundEnergySearch(single_qubit.encoding, single_qubit.state_prep, GAMMA, h,
                                    vartheta, shift=h / 7.0)
        hits = sum(search.run(seed).contains(0.4) for seed in range(100))
        assert hits >= 90

    def test_success_rate_with_looser_confidence(self, single_qubit):
        h, vartheta = 0.05, 0.2
        search = GroundEnergySearch(single_qubit.encoding, single_qubit.state_prep, GAMMA, h,
                                    vartheta, shift=h / 7.0)
        runs = 500
        failures = runs - sum(search.run(seed).contains(0.4) for seed in range(runs))
        sigma = np.sqrt(vartheta * (1.0 - vartheta) / runs)
        assert failures / runs <= vartheta + 3.0 * sigma

    def test_ensemble_fidelity_on_planted_instance(self):
        instance = make_random_gapped(3, 0.3, 0.2, 77)
        vartheta, eps = 0.1, 1e-2
        states = [
            prepare_without_bound(instance.encoding, instance.state_prep, 0.3, 0.2, eps, vartheta,
                                  seed, truth=instance, shift=0.2 / 6.0 / 7.0).state
            for seed in range(20)
        ]
        assert ensemble_fidelity(states, instance) >= mixed_state_floor(vartheta, eps)
