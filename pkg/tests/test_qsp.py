import numpy as np
import pytest

from modules.blockenc.encoding import Direction, OracleTag, QueryLedger
from modules.exceptions import ContractViolation, MalformedInput, QubitBudgetExceeded
from modules.hamlib.benchmarks import (
    make_counting,
    make_grover_family,
    make_random_gapped,
    make_transverse_field_ising,
    single_qubit_encoding,
)
from modules.linalg import eig_hermitian, is_unitary, reassemble
from modules.polyapprox.remez import build_sign_poly, eval_poly
from modules.qsp.circuit import assemble_qsp_unitary
from modules.qsp.phases import (
    PhaseFactorSequence,
    qsp_polynomial,
    qsp_product_2x2,
    realized_residual,
    solve_phase_factors,
    wx_to_reflection,
)


@pytest.fixture(scope="module")
def sign_target():
    return build_sign_poly(0.2, 1e-4)


@pytest.fixture(scope="module")
def sign_phases(sign_target):
    return solve_phase_factors(sign_target, 1e-4)


def wx_product(phi, x):
    """(0, 0) entry of ``e^{iφ_0 Z} Π_j W(x) e^{iφ_j Z}`` with ``W(x) = [[x, i s], [i s, x]]``."""
    s = np.sqrt(1.0 - x * x)
    W = np.array([[x, 1j * s], [1j * s, x]])
    product = np.diag([np.exp(1j * phi[0]), np.exp(-1j * phi[0])])
    for angle in phi[1:]:
        product = product @ W @ np.diag([np.exp(1j * angle), np.exp(-1j * angle)])
    return product[0, 0]


class TestPhaseSolver:
    def test_residual_within_budget(self, sign_target, sign_phases):
        assert sign_phases.degree == sign_target.degree
        assert sign_phases.residual <= 1e-4
        assert realized_residual(sign_phases, sign_target) == pytest.approx(sign_phases.residual)

    def test_real_part_tracks_sign_away_from_window(self, sign_phases):
        assert abs(qsp_product_2x2(sign_phases, 0.7).real - 1.0) <= 2e-4
        assert abs(qsp_product_2x2(sign_phases, -0.7).real + 1.0) <= 2e-4

    def test_realized_polynomial_is_bounded(self, sign_phases):
        xs = np.linspace(-1.0, 1.0, 2001)
        assert np.max(np.abs(qsp_polynomial(sign_phases, xs))) <= 1.0 + 1e-10

    def test_negated_sequence_flips_sign(self, sign_phases):
        xs = np.linspace(-1.0, 1.0, 101)
        assert np.allclose(
            qsp_polynomial(sign_phases.negated(), xs), -qsp_polynomial(sign_phases, xs),
            atol=1e-12,
        )

    def test_linear_target(self):
        phases = solve_phase_factors(lambda x: 0.5 * x, 1e-8, degree=1)
        xs = np.linspace(-1.0, 1.0, 11)
        assert np.allclose(qsp_polynomial(phases, xs).real, 0.5 * xs, atol=1e-8)

    def test_callable_target_needs_degree(self):
        with pytest.raises(ContractViolation):
            solve_phase_factors(lambda x: x, 1e-6)

    def test_rejects_even_degree(self):
        with pytest.raises(ContractViolation):
            solve_phase_factors(lambda x: x, 1e-6, degree=4)

    def test_rejects_unbounded_target(self):
        with pytest.raises(ContractViolation):
            solve_phase_factors(lambda x: 2.0 * x, 1e-6, degree=1)

    def test_signal_outside_unit_interval(self, sign_phases):
        with pytest.raises(ContractViolation):
            qsp_product_2x2(sign_phases, 1.01)


class TestConventions:
    def test_wx_phases_convert_to_same_polynomial(self, rng):
        phi = rng.uniform(-np.pi, np.pi, 6)
        psi = wx_to_reflection(phi)
        for x in np.linspace(-1.0, 1.0, 9):
            assert qsp_product_2x2(psi, x) == pytest.approx(wx_product(phi, x), abs=1e-12)

    def test_json_rejects_other_conventions(self, sign_phases):
        payload = sign_phases.to_json()
        payload["convention"] = "Wx"
        with pytest.raises(ContractViolation):
            PhaseFactorSequence.from_json(payload)

    def test_json_degree_must_match(self, sign_phases):
        payload = sign_phases.to_json()
        payload["degree"] += 2
        with pytest.raises(MalformedInput):
            PhaseFactorSequence.from_json(payload)

    def test_json_restores_phases(self, sign_phases):
        restored = PhaseFactorSequence.from_json(sign_phases.to_json())
        assert np.allclose(restored.phases, sign_phases.phases)
        assert restored.residual == sign_phases.residual


def spectral_real_part(phases, operator):
    values, vectors = eig_hermitian(operator)
    return reassemble(qsp_polynomial(phases, values).real, vectors)


class TestCircuitAssembly:
    def test_block_realizes_real_part_single_qubit(self, sign_phases, single_qubit):
        circuit = assemble_qsp_unitary(single_qubit.encoding, sign_phases)
        assert is_unitary(circuit.unitary, tol=1e-9)
        expected = spectral_real_part(sign_phases, single_qubit.H / single_qubit.alpha)
        assert np.allclose(circuit.block(), expected, atol=1e-9)

    def test_block_realizes_real_part_counting_oracle(self, sign_phases):
        instance = make_counting(3, [0, 5])
        circuit = assemble_qsp_unitary(instance.encoding, sign_phases)
        expected = spectral_real_part(sign_phases, instance.H)
        assert np.allclose(circuit.block(), expected, atol=1e-9)

    @pytest.mark.parametrize(
        "build",
        [
            lambda: make_grover_family(3, 0.5),
            lambda: make_grover_family(4, 0.3),
            lambda: make_random_gapped(3, 0.4, 0.2, 11),
            lambda: make_random_gapped(4, 0.6, 0.1, 12),
            lambda: make_transverse_field_ising(3, coupling=0.5, field=1.0),
            lambda: make_transverse_field_ising(4, coupling=0.25, field=1.0),
        ],
        ids=["grover-3", "grover-4", "gapped-3", "gapped-4", "ising-3", "ising-4"],
    )
    def test_block_matches_spectral_oracle(self, sign_phases, build):
        instance = build()
        circuit = assemble_qsp_unitary(instance.encoding, sign_phases)
        assert circuit.unitary.shape[0] <= 64
        assert is_unitary(circuit.unitary, tol=1e-9)
        expected = spectral_real_part(sign_phases, instance.H / instance.alpha)
        assert np.allclose(circuit.block(), expected, atol=1e-9)

    def test_block_tracks_sign_of_spectrum(self, sign_phases):
        # H(0.3) has eigenvalues 0.4 and 1.0, both in the window's complement
        circuit = assemble_qsp_unitary(single_qubit_encoding(0.3), sign_phases)
        assert np.allclose(circuit.block(), np.eye(2), atol=2e-4)

    def test_query_cost_alternates_oracle_and_inverse(self, sign_phases, single_qubit):
        ledger = QueryLedger()
        circuit = assemble_qsp_unitary(single_qubit.encoding, sign_phases, ledger=ledger)
        d = sign_phases.degree
        assert ledger.count(OracleTag.U_H, Direction.FORWARD) == (d + 1) // 2
        assert ledger.count(OracleTag.U_H, Direction.INVERSE) == (d - 1) // 2
        assert circuit.num_ancilla == single_qubit.encoding.num_ancilla + 1

    def test_register_cap(self, sign_phases, single_qubit, override_settings):
        override_settings(MAX_QUBITS=2)
        with pytest.raises(QubitBudgetExceeded):
            assemble_qsp_unitary(single_qubit.encoding, sign_phases)

    def test_polynomial_at_eigenvalues(self, sign_phases, sign_target, single_qubit):
        circuit = assemble_qsp_unitary(single_qubit.encoding, sign_phases)
        values, vectors = eig_hermitian(single_qubit.H)
        diagonal = np.real(np.diag(vectors.conj().T @ circuit.block() @ vectors))
        assert np.allclose(diagonal, eval_poly(sign_target, values), atol=1e-4)
