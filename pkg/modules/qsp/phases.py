"""Phase factors for quantum signal processing.

Stored phases follow the reflection convention: the realized polynomial is the (1,1) entry
of ``e^{iφ_0 σz} ∏_{j=1}^{d} [R(x) e^{iφ_j σz}]`` with
``R(x) = [[x, √(1−x²)], [√(1−x²), −x]]``.

The optimizer runs in the Wx convention, where the signal operator is
``W(x) = e^{i arccos(x) σx}`` and the symmetric start ``(π/4, 0, …, 0, π/4)`` has a
well-understood basin. Since ``W(x) = i e^{−iπ/4 σz} R(x) e^{−iπ/4 σz}``, the two
conventions are related by fixed shifts of the phases (see :func:`wx_to_reflection`).
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy import optimize

from cli.config import settings
from modules.exceptions import ContractViolation, MalformedInput, PhaseSolverError
from modules.polyapprox.remez import OddPolynomial, eval_poly

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]

CONVENTION = "reflection"


@dataclass(frozen=True)
class PhaseFactorSequence:
    """Phases ``φ_0 … φ_d`` in the reflection convention."""

    phases: FloatArray
    residual: float = 0.0
    target: Optional[OddPolynomial] = None

    def __post_init__(self) -> None:
        if len(self.phases) < 2:
            raise ContractViolation("a phase sequence needs at least two phases")

    @property
    def degree(self) -> int:
        return len(self.phases) - 1

    def negated(self) -> "PhaseFactorSequence":
        """Sequence realizing ``−P``: shifting ``φ_0`` by π multiplies the product by −1."""
        phases = np.array(self.phases, dtype=float)
        phases[0] = _wrap(phases[0] + np.pi)
        return replace(self, phases=phases)

    def to_json(self) -> Dict[str, Any]:
        return {
            "phases": [float(p) for p in self.phases],
            "degree": self.degree,
            "residual": float(self.residual),
            "convention": CONVENTION,
        }

    @classmethod
    def from_json(cls, payload: Dict[str, Any]) -> "PhaseFactorSequence":
        convention = payload.get("convention", CONVENTION)
        if convention != CONVENTION:
            raise ContractViolation(
                f"phase convention '{convention}' is not supported, expected '{CONVENTION}'"
            )
        try:
            phases = np.asarray(payload["phases"], dtype=float)
            residual = float(payload.get("residual", 0.0))
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedInput(f"malformed phase payload: {e}") from e
        if "degree" in payload and int(payload["degree"]) != len(phases) - 1:
            raise MalformedInput(f"degree {payload['degree']} does not match {len(phases)} phases")
        return cls(phases=phases, residual=residual)


def _wrap(angle: Union[float, FloatArray]) -> Any:
    return np.mod(np.asarray(angle) + np.pi, 2.0 * np.pi) - np.pi


def _phase_array(phases: Union[PhaseFactorSequence, Any]) -> FloatArray:
    if isinstance(phases, PhaseFactorSequence):
        return np.asarray(phases.phases, dtype=float)
    return np.asarray(phases, dtype=float)


def qsp_polynomial(phases: Union[PhaseFactorSequence, Any], xs: Any) -> ComplexArray:
    """Vectorized (1,1) entry of the reflection-convention product at each ``x``.

    Raises:
        ContractViolation: If any ``|x| > 1``
    """
    phi = _phase_array(phases)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(np.abs(xs) > 1.0 + 1e-12):
        raise ContractViolation("QSP signal must satisfy |x| <= 1")
    xs = np.clip(xs, -1.0, 1.0)
    s = np.sqrt(1.0 - xs * xs)

    # row vector e_0^T propagated through the product from the left
    row0 = np.full(xs.shape, np.exp(1j * phi[0]), dtype=complex)
    row1 = np.zeros(xs.shape, dtype=complex)
    for angle in phi[1:]:
        row0, row1 = row0 * xs + row1 * s, row0 * s - row1 * xs
        row0 = row0 * np.exp(1j * angle)
        row1 = row1 * np.exp(-1j * angle)
    return row0


def qsp_product_2x2(phases: Union[PhaseFactorSequence, Any], x: float) -> complex:
    """The polynomial ``P(x)`` realized by a phase sequence at a single point."""
    if abs(x) > 1.0 + 1e-12:
        raise ContractViolation(f"QSP signal must satisfy |x| <= 1, got {x}")
    return complex(qsp_polynomial(phases, [x])[0])


def wx_to_reflection(phi: FloatArray) -> FloatArray:
    """Convert Wx-convention phases to reflection-convention phases with the same ``P``."""
    d = len(phi) - 1
    psi = np.array(phi, dtype=float) - np.pi / 2.0
    psi[0] = phi[0] - np.pi / 4.0 + d * np.pi / 2.0
    psi[-1] = phi[-1] - np.pi / 4.0
    return _wrap(psi)


def _wx_sweeps(phi: FloatArray, xs: FloatArray) -> Tuple[ComplexArray, ComplexArray]:
    """``P(x_k)`` and ``∂P(x_k)/∂φ_j`` in the Wx convention by forward/backward sweeps.

    Writing the product as ``M_0 M_1 … M_d`` with ``M_0 = E_0`` and ``M_j = W E_j``, the
    derivative with respect to ``φ_j`` is ``i (u_j[0] v_j[0] − u_j[1] v_j[1])`` where ``u_j`` is
    the row vector entering ``E_j`` from the left and ``v_j = E_j r_j`` the column vector
    leaving it to the right.
    """
    d = len(phi) - 1
    k = xs.shape[0]
    s = 1j * np.sqrt(1.0 - xs * xs)
    plus = np.exp(1j * phi)
    minus = np.exp(-1j * phi)

    u = np.empty((d + 1, k, 2), dtype=complex)
    u[0, :, 0] = 1.0
    u[0, :, 1] = 0.0
    for j in range(d):
        a = u[j, :, 0] * plus[j]
        b = u[j, :, 1] * minus[j]
        u[j + 1, :, 0] = a * xs + b * s
        u[j + 1, :, 1] = a * s + b * xs

    v = np.empty((d + 1, k, 2), dtype=complex)
    r0 = np.ones(k, dtype=complex)
    r1 = np.zeros(k, dtype=complex)
    for j in range(d, -1, -1):
        v[j, :, 0] = plus[j] * r0
        v[j, :, 1] = minus[j] * r1
        if j > 0:
            r0 = xs * v[j, :, 0] + s * v[j, :, 1]
            r1 = s * v[j, :, 0] + xs * v[j, :, 1]

    values = u[0, :, 0] * v[0, :, 0] + u[0, :, 1] * v[0, :, 1]
    derivatives = 1j * (u[:, :, 0] * v[:, :, 0] - u[:, :, 1] * v[:, :, 1])
    return values, derivatives.T


def _positive_nodes(count: int) -> FloatArray:
    """The ``count`` positive roots of ``T_{2 count}``."""
    k = np.arange(1, count + 1)
    return np.cos((2 * k - 1) * np.pi / (4 * count))


def _check_grid(points: int) -> FloatArray:
    k = np.arange(points)
    return np.cos((2 * k + 1) * np.pi / (2 * points))


def _target_function(target: Union[OddPolynomial, Callable[[FloatArray], FloatArray]]) -> Callable:
    if isinstance(target, OddPolynomial):
        return lambda xs: np.asarray(eval_poly(target, xs), dtype=float)
    return lambda xs: np.asarray(target(xs), dtype=float)


def realized_residual(
    phases: Union[PhaseFactorSequence, Any],
    target: Union[OddPolynomial, Callable[[FloatArray], FloatArray]],
    points: Optional[int] = None,
) -> float:
    """Max-norm mismatch of ``Re P`` against the target on a Chebyshev grid of [−1, 1]."""
    points = settings.PHASE_CHECK_POINTS if points is None else points
    grid = _check_grid(points)
    f = _target_function(target)
    return float(np.max(np.abs(qsp_polynomial(phases, grid).real - f(grid))))


def solve_phase_factors(
    target: Union[OddPolynomial, Callable[[FloatArray], FloatArray]],
    eps_prime: float,
    degree: Optional[int] = None,
    max_iter: Optional[int] = None,
) -> PhaseFactorSequence:
    """Find phases with ``max |Re P(x) − target(x)| ≤ eps_prime`` on [−1, 1].

    The least-squares objective ``Σ_k (Re P(x_k) − f(x_k))²`` over the positive Chebyshev
    nodes is minimized by L-BFGS from the symmetric start, over symmetric phase sequences.
    If that stalls above ``eps_prime`` the result is polished with Levenberg–Marquardt on the
    same residuals.

    Args:
        target: Odd polynomial, or an odd callable when ``degree`` is given
        eps_prime: Required max-norm residual
        degree: Odd degree, taken from the target polynomial when omitted
        max_iter: L-BFGS iteration cap

    Returns:
        Phases in the reflection convention with the measured residual

    Raises:
        ContractViolation: If the target is not bounded by 1 or the degree is not odd
        PhaseSolverError: If the residual stays above ``eps_prime``
    """
    if degree is None:
        if not isinstance(target, OddPolynomial):
            raise ContractViolation("degree is required for callable targets")
        degree = target.degree
    if degree < 1 or degree % 2 == 0:
        raise ContractViolation(f"phase solver needs an odd degree, got {degree}")
    if eps_prime <= 0.0:
        raise ContractViolation(f"eps_prime must be positive, got {eps_prime}")
    max_iter = settings.PHASE_MAX_ITER if max_iter is None else max_iter

    f = _target_function(target)
    check = _check_grid(settings.PHASE_CHECK_POINTS)
    if np.max(np.abs(f(check))) > 1.0 + 1e-12:
        raise ContractViolation("target exceeds 1 in magnitude on [-1, 1]")

    count = (degree + 1) // 2
    nodes = _positive_nodes(count)
    values = f(nodes)

    def expand(theta: FloatArray) -> FloatArray:
        return np.concatenate((theta, theta[::-1]))

    def residuals_and_jacobian(theta: FloatArray) -> Tuple[FloatArray, FloatArray]:
        p, dp = _wx_sweeps(expand(theta), nodes)
        full = dp.real
        return p.real - values, full[:, :count] + full[:, ::-1][:, :count]

    def objective(theta: FloatArray) -> Tuple[float, FloatArray]:
        r, jac = residuals_and_jacobian(theta)
        return float(r @ r) / count, 2.0 * (jac.T @ r) / count

    def measured(theta: FloatArray) -> Tuple[FloatArray, float]:
        psi = wx_to_reflection(expand(theta))
        return psi, float(np.max(np.abs(qsp_polynomial(psi, check).real - f(check))))

    logger.info(f"Solving phase factors for degree {degree}, eps'={eps_prime:.1e}")
    theta0 = np.zeros(count)
    theta0[0] = np.pi / 4.0
    result = optimize.minimize(
        objective,
        theta0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": 1e-14, "ftol": 1e-30, "maxcor": 30},
    )
    theta = result.x
    psi, residual = measured(theta)
    logger.info(f"L-BFGS finished after {result.nit} iterations, residual {residual:.3e}")

    if residual > eps_prime or residual > 1e-12:
        polished = optimize.least_squares(
            lambda t: residuals_and_jacobian(t)[0],
            theta,
            jac=lambda t: residuals_and_jacobian(t)[1],
            method="lm",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=200 * (count + 1),
        )
        psi_polished, residual_polished = measured(polished.x)
        if residual_polished < residual:
            psi, residual = psi_polished, residual_polished
            logger.info(f"Least-squares polish reached residual {residual:.3e}")

    if residual > eps_prime:
        logger.error(f"Phase solver stalled at residual {residual:.3e} > {eps_prime:.1e}")
        raise PhaseSolverError(f"phase factors for degree {degree} did not converge", residual,
                               result.nit)

    return PhaseFactorSequence(
        phases=psi,
        residual=residual,
        target=target if isinstance(target, OddPolynomial) else None,
    )
