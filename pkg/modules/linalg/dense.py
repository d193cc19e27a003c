"""Dense complex linear algebra for register-level simulation.

Matrices and state vectors are plain numpy arrays (complex128). Qubit 0 is the most
significant tensor factor, so for a register laid out as ``ancillas ⊗ system`` the block
selected by all-zero ancillas is the leading ``2^n x 2^n`` block.
"""

import logging
from functools import reduce
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from cli.config import settings
from modules.exceptions import (
    ContractViolation,
    DimensionMismatch,
    MalformedInput,
    QubitBudgetExceeded,
    ZeroProbabilityBranch,
)

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]
StateVector = npt.NDArray[np.complex128]
SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Return a numpy Generator for an explicit seed, seed sequence or generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def num_qubits(dim: int) -> int:
    """Number of qubits for a register dimension that must be a power of two."""
    if dim < 1 or dim & (dim - 1):
        raise DimensionMismatch(f"dimension {dim} is not a power of 2")
    return dim.bit_length() - 1


def check_register(qubits: int) -> None:
    """Reject registers larger than the configured dense cap."""
    if qubits > settings.MAX_QUBITS:
        raise QubitBudgetExceeded(qubits, settings.MAX_QUBITS)


def _as_square(A: Any, name: str = "matrix") -> ComplexMatrix:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    return A


def is_unitary(U: Any, tol: Optional[float] = None) -> bool:
    """Check ``U†U = I`` within ``tol`` in operator norm."""
    tol = settings.STRUCTURAL_TOL if tol is None else tol
    U = _as_square(U, "unitary")
    return bool(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2) <= tol)


def is_hermitian(A: Any, tol: Optional[float] = None) -> bool:
    """Check ``A = A†`` within ``tol`` in operator norm."""
    tol = settings.STRUCTURAL_TOL if tol is None else tol
    A = _as_square(A, "operator")
    return bool(np.linalg.norm(A - A.conj().T, 2) <= tol)


def normalize(state: Any) -> StateVector:
    """Return the state scaled to unit norm.

    Raises:
        ZeroProbabilityBranch: If the state has zero norm
    """
    state = np.asarray(state, dtype=complex)
    norm = np.linalg.norm(state)
    if norm < 1e-300:
        raise ZeroProbabilityBranch("cannot normalize a zero vector")
    return state / norm


def kron(*operands: Any) -> ComplexMatrix:
    """Tensor product of matrices or vectors, leftmost factor most significant."""
    if not operands:
        raise ContractViolation("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(op, dtype=complex) for op in operands))


def apply(U: Any, state: Any) -> StateVector:
    """Apply an operator to a state vector."""
    U = _as_square(U, "operator")
    state = np.asarray(state, dtype=complex)
    if state.ndim != 1 or state.shape[0] != U.shape[1]:
        raise DimensionMismatch(f"operator {U.shape} cannot act on state of length {state.shape}")
    return U @ state


def basis_state(qubits: int, index: int = 0) -> StateVector:
    """Computational basis state ``|index⟩`` on ``qubits`` qubits."""
    state = np.zeros(2**qubits, dtype=complex)
    state[index] = 1.0
    return state


def _outcome_index(dim: int, qubit_indices: Sequence[int]) -> npt.NDArray[np.int64]:
    n = num_qubits(dim)
    for q in qubit_indices:
        if not 0 <= q < n:
            raise DimensionMismatch(f"qubit index {q} outside register of {n} qubits")
    basis = np.arange(dim)
    index = np.zeros(dim, dtype=np.int64)
    for q in qubit_indices:
        index = (index << 1) | ((basis >> (n - 1 - q)) & 1)
    return index


def marginal_probabilities(state: Any, qubit_indices: Sequence[int]) -> npt.NDArray[np.float64]:
    """Born-rule distribution over the bit patterns of the given qubits.

    Entry ``j`` is the probability of reading the bits of ``j`` (big-endian, in the order of
    ``qubit_indices``).
    """
    state = np.asarray(state, dtype=complex)
    index = _outcome_index(state.shape[0], qubit_indices)
    return np.bincount(index, weights=np.abs(state) ** 2, minlength=2 ** len(qubit_indices))


def _bits(outcome: int, width: int) -> Tuple[int, ...]:
    return tuple((outcome >> (width - 1 - j)) & 1 for j in range(width))


def measure(
    state: Any, qubit_indices: Sequence[int], rng: SeedLike
) -> Tuple[Tuple[int, ...], StateVector]:
    """Projectively measure some qubits of a state.

    Args:
        state: Normalized state vector
        qubit_indices: Qubits to read, qubit 0 being the most significant
        rng: Explicit seed or generator

    Returns:
        Tuple of the outcome bits and the renormalized post-measurement state
    """
    rng = as_generator(rng)
    state = np.asarray(state, dtype=complex)
    index = _outcome_index(state.shape[0], qubit_indices)
    probs = np.bincount(index, weights=np.abs(state) ** 2, minlength=2 ** len(qubit_indices))
    total = probs.sum()
    if total <= 0.0:
        raise ZeroProbabilityBranch("state has zero norm")
    outcome = int(rng.choice(probs.shape[0], p=probs / total))
    if probs[outcome] <= 1e-300:
        raise ZeroProbabilityBranch(f"outcome {outcome} has zero probability")
    post = np.where(index == outcome, state, 0.0) / np.sqrt(probs[outcome])
    return _bits(outcome, len(qubit_indices)), post


def sample_outcomes(
    state: Any, qubit_indices: Sequence[int], shots: int, rng: SeedLike
) -> npt.NDArray[np.int64]:
    """Outcomes of ``shots`` independent measurements of identically prepared states."""
    rng = as_generator(rng)
    probs = marginal_probabilities(state, qubit_indices)
    return rng.choice(probs.shape[0], size=shots, p=probs / probs.sum())


def operator_norm_diff(A: Any, B: Any) -> float:
    """Largest singular value of ``A - B``."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    return float(np.linalg.norm(A - B, 2))


def expectation(H: Any, state: Any) -> float:
    """Real expectation value ``⟨ψ|H|ψ⟩`` of a Hermitian operator."""
    state = np.asarray(state, dtype=complex)
    return float(np.real(np.vdot(state, apply(H, state))))


def state_preparation_unitary(phi: Any) -> ComplexMatrix:
    """Unitary whose first column is ``phi``, built from one Householder reflection."""
    phi = normalize(phi)
    dim = phi.shape[0]
    num_qubits(dim)
    phase = np.exp(1j * np.angle(phi[0])) if abs(phi[0]) > 0 else 1.0
    target = np.zeros(dim, dtype=complex)
    target[0] = phase
    w = target - phi
    reflection = np.eye(dim, dtype=complex)
    if np.linalg.norm(w) > 1e-14:
        reflection -= 2.0 * np.outer(w, w.conj()) / np.vdot(w, w)
    phases = np.ones(dim, dtype=complex)
    phases[0] = phase
    return reflection * phases[np.newaxis, :]


def matrix_to_json(A: Any) -> Dict[str, Any]:
    """Serialize a matrix as ``{"rows", "cols", "re", "im"}`` in row-major order."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {A.shape}")
    return {
        "rows": int(A.shape[0]),
        "cols": int(A.shape[1]),
        "re": A.real.ravel().tolist(),
        "im": A.imag.ravel().tolist(),
    }


def matrix_from_json(payload: Dict[str, Any]) -> ComplexMatrix:
    """Inverse of :func:`matrix_to_json`.

    Raises:
        MalformedInput: If fields are missing or inconsistent
    """
    try:
        rows, cols = int(payload["rows"]), int(payload["cols"])
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload.get("im", np.zeros(rows * cols)), dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedInput(f"malformed matrix payload: {e}") from e
    if re.size != rows * cols or im.size != rows * cols:
        raise MalformedInput(f"matrix payload has {re.size} entries for shape ({rows}, {cols})")
    return (re + 1j * im).reshape(rows, cols)
