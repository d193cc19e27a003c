"""Odd minimax approximation of the sign function in the Chebyshev basis.

The approximant is ``S(x) = Σ_j c_j T_{2j+1}(x)``. Because every basis function is odd, the
minimax problem on ``[−1, −δ] ∪ [δ, 1]`` reduces to the single interval ``[δ, 1]`` with target
1, which is solved with the multi-point Remez exchange.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from numpy.polynomial import chebyshev
from scipy import linalg as sla

from cli.config import settings
from modules.exceptions import ContractViolation, ConvergenceError, MalformedInput
from modules.linalg.dense import ComplexMatrix, _as_square
from modules.linalg.eigen import eig_hermitian, reassemble

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

# Relative gap between the grid maximum and the levelled error accepted as converged
REMEZ_TOL = 1e-7
MAX_DEGREE = 20_001


@dataclass(frozen=True)
class OddPolynomial:
    """Odd polynomial stored by its coefficients on ``T_1, T_3, …, T_d``."""

    degree: int
    cheb_odd: FloatArray
    delta: float
    eps_achieved: float
    eps_target: Optional[float] = None

    def __post_init__(self) -> None:
        if self.degree < 1 or self.degree % 2 == 0:
            raise ContractViolation(f"degree must be odd and positive, got {self.degree}")
        if len(self.cheb_odd) != (self.degree + 1) // 2:
            raise ContractViolation(
                f"degree {self.degree} needs {(self.degree + 1) // 2} odd coefficients, "
                f"got {len(self.cheb_odd)}"
            )

    @property
    def full_coeffs(self) -> FloatArray:
        """Coefficients on ``T_0 … T_d`` with the even entries set to zero."""
        full = np.zeros(self.degree + 1)
        full[1::2] = self.cheb_odd
        return full

    def __call__(self, x: Union[float, FloatArray]) -> Union[float, FloatArray]:
        return eval_poly(self, x)

    def to_json(self) -> Dict[str, Any]:
        return {
            "degree": self.degree,
            "delta": self.delta,
            "eps": self.eps_target if self.eps_target is not None else self.eps_achieved,
            "eps_achieved": self.eps_achieved,
            "cheb_odd": [float(c) for c in self.cheb_odd],
        }

    @classmethod
    def from_json(cls, payload: Dict[str, Any]) -> "OddPolynomial":
        try:
            return cls(
                degree=int(payload["degree"]),
                cheb_odd=np.asarray(payload["cheb_odd"], dtype=float),
                delta=float(payload["delta"]),
                eps_achieved=float(payload.get("eps_achieved", payload["eps"])),
                eps_target=float(payload["eps"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedInput(f"malformed polynomial payload: {e}") from e


@dataclass
class RemezState:
    """Reference set and levelled error of a Remez run."""

    nodes: FloatArray
    levelled_error: float
    iterations: int = 0
    max_error: float = float("inf")
    converged: bool = False
    history: List[float] = field(default_factory=list)


def odd_basis(x: FloatArray, count: int) -> FloatArray:
    """Matrix ``[T_1(x), T_3(x), …]`` with ``count`` columns, for ``x`` in [−1, 1]."""
    orders = 2 * np.arange(count) + 1
    return np.cos(np.outer(np.arccos(np.clip(x, -1.0, 1.0)), orders))


def _eval_positive(cheb_odd: FloatArray, x: FloatArray) -> FloatArray:
    full = np.zeros(2 * len(cheb_odd))
    full[1::2] = cheb_odd
    return chebyshev.chebval(x, full)


def eval_poly(p: OddPolynomial, x: Union[float, FloatArray]) -> Union[float, FloatArray]:
    """Evaluate ``p`` by Clenshaw recurrence.

    The value is computed at ``|x|`` and the sign of ``x`` is applied afterwards, so
    ``p(−x) = −p(x)`` and ``p(0) = 0`` hold exactly.

    Raises:
        ContractViolation: If any ``|x| > 1``
    """
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-12):
        raise ContractViolation(
            f"polynomial evaluated outside [-1, 1] (max |x| {np.max(np.abs(arr))})"
        )
    magnitude = np.minimum(np.abs(arr), 1.0)
    values = np.sign(arr) * _eval_positive(p.cheb_odd, magnitude)
    if values.ndim == 0:
        return float(values)
    return values


def eval_on_hermitian(p: OddPolynomial, A: Any, tol: Optional[float] = None) -> ComplexMatrix:
    """Spectral application ``V diag(p(λ_k)) V†`` for a Hermitian ``A`` with ``‖A‖ ≤ 1``.

    Raises:
        ContractViolation: If ``A`` is not Hermitian or its norm exceeds 1
    """
    tol = settings.STRUCTURAL_TOL if tol is None else tol
    A = _as_square(A, "operator")
    eigenvalues, eigenvectors = eig_hermitian(A, tol=tol)
    if np.max(np.abs(eigenvalues), initial=0.0) > 1.0 + tol:
        raise ContractViolation(f"operator norm {np.max(np.abs(eigenvalues)):.6f} exceeds 1")
    values = eval_poly(p, np.clip(eigenvalues, -1.0, 1.0))
    return reassemble(np.asarray(values, dtype=float), eigenvectors)


def _chebyshev_points(lo: float, hi: float, count: int) -> FloatArray:
    """Chebyshev extreme points mapped to ``[lo, hi]``, ascending."""
    if count == 1:
        return np.array([hi])
    k = np.arange(count)
    return np.sort(0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos(np.pi * k / (count - 1)))


def _local_extrema(grid: FloatArray, error: FloatArray) -> Tuple[FloatArray, FloatArray]:
    """One extremum of ``|error|`` per run of constant sign, left to right."""
    signs = np.sign(error)
    signs[signs == 0] = 1.0
    breaks = np.flatnonzero(np.diff(signs)) + 1
    points, values = [], []
    for segment in np.split(np.arange(grid.shape[0]), breaks):
        i = segment[np.argmax(np.abs(error[segment]))]
        x_star = grid[i]
        # parabolic refinement through the neighbouring grid points
        if 0 < i < grid.shape[0] - 1:
            x0, x1, x2 = grid[i - 1], grid[i], grid[i + 1]
            y0, y1, y2 = error[i - 1], error[i], error[i + 1]
            denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
            a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
            b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
            if a != 0.0:
                candidate = -b / (2.0 * a)
                if x0 < candidate < x2:
                    x_star = candidate
        points.append(x_star)
        values.append(error[i])
    return np.array(points), np.array(values)


def _single_exchange(
    nodes: FloatArray, node_signs: FloatArray, x_star: float, sign_star: float
) -> FloatArray:
    """Insert the global extremum into the reference keeping sign alternation."""
    nodes = nodes.copy()
    i = int(np.searchsorted(nodes, x_star))
    if i == 0:
        if sign_star == node_signs[0]:
            nodes[0] = x_star
        else:
            nodes = np.concatenate(([x_star], nodes[:-1]))
    elif i == nodes.shape[0]:
        if sign_star == node_signs[-1]:
            nodes[-1] = x_star
        else:
            nodes = np.concatenate((nodes[1:], [x_star]))
    elif sign_star == node_signs[i - 1]:
        nodes[i - 1] = x_star
    else:
        nodes[i] = x_star
    return nodes


def remez_sign(
    delta: float, degree: int, max_iter: Optional[int] = None
) -> Tuple[FloatArray, RemezState]:
    """Minimax odd approximation of 1 on ``[delta, 1]`` at a fixed odd degree.

    Args:
        delta: Left end of the approximation interval
        degree: Odd polynomial degree
        max_iter: Iteration cap, defaults to ``settings.REMEZ_MAX_ITER``

    Returns:
        Odd Chebyshev coefficients and the final Remez state

    Raises:
        ConvergenceError: If the exchange does not level within the cap
    """
    max_iter = settings.REMEZ_MAX_ITER if max_iter is None else max_iter
    count = (degree + 1) // 2
    grid = _chebyshev_points(delta, 1.0, max(settings.REMEZ_GRID_MIN, 40 * degree))
    state = RemezState(nodes=_chebyshev_points(delta, 1.0, count + 1), levelled_error=0.0)
    alternation = (-1.0) ** np.arange(count + 1)
    coeffs = np.zeros(count)

    for iteration in range(1, max_iter + 1):
        system = np.column_stack((odd_basis(state.nodes, count), alternation))
        solution = sla.solve(system, np.ones(count + 1))
        coeffs, levelled = solution[:count], solution[count]
        error = _eval_positive(coeffs, grid) - 1.0
        max_error = float(np.max(np.abs(error)))

        state.levelled_error = abs(float(levelled))
        state.max_error = max_error
        state.iterations = iteration
        state.history.append(max_error)

        points, values = _local_extrema(grid, error)
        while points.shape[0] > count + 1:
            if abs(values[0]) < abs(values[-1]):
                points, values = points[1:], values[1:]
            else:
                points, values = points[:-1], values[:-1]

        equioscillating = max_error - state.levelled_error <= REMEZ_TOL * max_error
        if equioscillating and points.shape[0] == count + 1:
            state.converged = True
            break

        if points.shape[0] == count + 1:
            state.nodes = points
        else:
            worst = int(np.argmax(np.abs(error)))
            node_signs = np.sign(_eval_positive(coeffs, state.nodes) - 1.0)
            state.nodes = _single_exchange(
                state.nodes, node_signs, grid[worst], np.sign(error[worst])
            )

    if not state.converged:
        logger.error(f"Remez did not converge at degree {degree} (delta={delta})")
        raise ConvergenceError(
            f"Remez exchange failed at degree {degree}", state.max_error, state.iterations
        )
    logger.debug(
        f"Remez degree {degree}: levelled error {state.levelled_error:.3e} "
        f"after {state.iterations} iterations"
    )
    return coeffs, state


def _rescaled(delta: float, degree: int) -> Tuple[FloatArray, float, RemezState]:
    """Remez coefficients divided by ``max(1, max |S|)`` and their error on ``[delta, 1]``."""
    coeffs, state = remez_sign(delta, degree)
    check = np.concatenate((
        np.linspace(0.0, 1.0, settings.REMEZ_GRID_MIN),
        _chebyshev_points(delta, 1.0, max(settings.REMEZ_GRID_MIN, 40 * degree)),
        state.nodes,
    ))
    peak = float(np.max(np.abs(_eval_positive(coeffs, check))))
    coeffs = coeffs / max(1.0, peak)
    on_interval = check[check >= delta]
    achieved = float(np.max(np.abs(_eval_positive(coeffs, on_interval) - 1.0)))
    return coeffs, achieved, state


def build_sign_poly(delta: float, eps: float) -> OddPolynomial:
    """Lowest-degree odd polynomial within ``eps`` of sign on ``[−1, −δ] ∪ [δ, 1]``.

    The polynomial is bounded by 1 on ``[−1, 1]`` after the safety rescale, and the
    reported ``eps_achieved`` is measured after that rescale.

    Args:
        delta: Half-width of the excluded window around 0, in (0, 1)
        eps: Target uniform error, in (0, 1)

    Returns:
        The sign approximant

    Raises:
        ContractViolation: On out-of-range arguments or ``eps`` below the floor
        ConvergenceError: If Remez fails or no degree up to the cap reaches ``eps``
    """
    if not 0.0 < delta < 1.0:
        raise ContractViolation(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 < eps < 1.0:
        raise ContractViolation(f"eps must lie in (0, 1), got {eps}")
    if eps < settings.EPS_FLOOR:
        raise ContractViolation(
            f"eps {eps:.1e} is below the reachable floor {settings.EPS_FLOOR:.1e}"
        )

    logger.info(f"Building sign polynomial for delta={delta:.4g}, eps={eps:.1e}")
    results: Dict[int, Tuple[FloatArray, float]] = {}

    def attempt(degree: int) -> bool:
        if degree not in results:
            coeffs, achieved, _ = _rescaled(delta, degree)
            results[degree] = (coeffs, achieved)
        return results[degree][1] <= eps

    # doubling to bracket the minimal degree, then bisection over odd degrees
    failing, passing = -1, 1
    while not attempt(passing):
        failing = passing
        passing = 2 * passing + 1
        if passing > MAX_DEGREE:
            raise ConvergenceError(
                f"no degree up to {MAX_DEGREE} reaches eps={eps:.1e}", results[failing][1], failing
            )
    while passing - failing > 2:
        middle = failing + 2 * ((passing - failing) // 4)
        if middle in (failing, passing):
            middle = failing + 2
        if attempt(middle):
            passing = middle
        else:
            failing = middle

    coeffs, achieved = results[passing]
    logger.info(f"Sign polynomial degree {passing}, achieved error {achieved:.3e}")
    return OddPolynomial(
        degree=passing, cheb_odd=coeffs, delta=delta, eps_achieved=achieved, eps_target=eps
    )


def minimal_degree(delta: float, eps: float) -> int:
    """Degree of :func:`build_sign_poly` for ``(delta, eps)``."""
    return build_sign_poly(delta, eps).degree


def sign_poly_at_degree(delta: float, degree: int) -> OddPolynomial:
    """Rescaled minimax sign approximant at a fixed odd degree."""
    if not 0.0 < delta < 1.0:
        raise ContractViolation(f"delta must lie in (0, 1), got {delta}")
    if degree < 1 or degree % 2 == 0:
        raise ContractViolation(f"degree must be odd and positive, got {degree}")
    coeffs, achieved, _ = _rescaled(delta, degree)
    return OddPolynomial(degree=degree, cheb_odd=coeffs, delta=delta, eps_achieved=achieved)
