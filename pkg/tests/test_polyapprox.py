import numpy as np
import pytest

from modules.exceptions import ContractViolation, MalformedInput
from modules.polyapprox.remez import (
    OddPolynomial,
    build_sign_poly,
    eval_on_hermitian,
    eval_poly,
    minimal_degree,
    remez_sign,
    sign_poly_at_degree,
)


@pytest.fixture(scope="module")
def poly():
    return build_sign_poly(0.2, 1e-2)


class TestSignPolynomial:
    def test_error_on_both_intervals(self, poly):
        x = np.linspace(0.2, 1.0, 4001)
        assert np.max(np.abs(eval_poly(poly, x) - 1.0)) <= 1e-2 + 1e-9
        assert np.max(np.abs(eval_poly(poly, -x) + 1.0)) <= 1e-2 + 1e-9
        assert poly.eps_achieved <= 1e-2

    def test_bounded_by_one(self, poly):
        x = np.linspace(-1.0, 1.0, 20_001)
        assert np.max(np.abs(eval_poly(poly, x))) <= 1.0 + 1e-9

    def test_odd_and_zero_at_origin(self, poly):
        x = np.linspace(0.0, 1.0, 101)
        assert np.array_equal(eval_poly(poly, -x), -eval_poly(poly, x))
        assert eval_poly(poly, 0.0) == 0.0

    def test_degree_is_odd_and_minimal(self, poly):
        assert poly.degree % 2 == 1
        if poly.degree > 1:
            assert sign_poly_at_degree(0.2, poly.degree - 2).eps_achieved > 1e-2

    def test_degree_monotone_in_window_and_accuracy(self):
        base = minimal_degree(0.2, 1e-2)
        assert minimal_degree(0.1, 1e-2) >= base
        assert minimal_degree(0.2, 1e-4) >= base

    def test_callable_and_scalar_evaluation(self, poly):
        assert isinstance(poly(0.5), float)
        assert poly(0.5) == pytest.approx(1.0, abs=1e-2)

    @pytest.mark.parametrize("delta, eps", [(0.0, 0.1), (1.0, 0.1), (0.2, 0.0), (0.2, 1.0)])
    def test_rejects_out_of_range_arguments(self, delta, eps):
        with pytest.raises(ContractViolation):
            build_sign_poly(delta, eps)

    def test_rejects_eps_below_floor(self, override_settings):
        override_settings(EPS_FLOOR=1e-3)
        with pytest.raises(ContractViolation):
            build_sign_poly(0.2, 1e-4)

    def test_evaluation_outside_unit_interval(self, poly):
        with pytest.raises(ContractViolation):
            eval_poly(poly, 1.5)


class TestRemez:
    def test_equioscillation_at_fixed_degree(self):
        coeffs, state = remez_sign(0.3, 9)
        assert state.converged
        assert len(coeffs) == 5
        assert state.levelled_error > 0.0
        assert state.max_error == pytest.approx(state.levelled_error, rel=1e-6)

    def test_fixed_degree_rejects_even(self):
        with pytest.raises(ContractViolation):
            sign_poly_at_degree(0.2, 8)


class TestSpectralApplication:
    def test_matches_scalar_evaluation(self, poly, rng):
        values = np.array([-0.9, -0.3, 0.25, 0.8])
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        A = (Q * values) @ Q.conj().T
        expected = (Q * eval_poly(poly, values)) @ Q.conj().T
        assert np.allclose(eval_on_hermitian(poly, A), expected, atol=1e-10)

    def test_rejects_norm_above_one(self, poly):
        with pytest.raises(ContractViolation):
            eval_on_hermitian(poly, 2.0 * np.eye(2))


class TestSerialization:
    def test_json_keeps_target_and_coefficients(self, poly):
        restored = OddPolynomial.from_json(poly.to_json())
        assert restored.degree == poly.degree
        assert restored.eps_target == 1e-2
        assert np.array_equal(restored.cheb_odd, poly.cheb_odd)

    def test_malformed_payload(self):
        with pytest.raises(MalformedInput):
            OddPolynomial.from_json({"degree": 3})

    def test_coefficient_count_must_match_degree(self):
        with pytest.raises(ContractViolation):
            OddPolynomial(degree=5, cheb_odd=np.ones(2), delta=0.2, eps_achieved=0.1)
