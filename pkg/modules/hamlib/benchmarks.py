"""Benchmark Hamiltonians with closed-form or exact ground truth.

Every instance carries its Hamiltonian, an exact block-encoding oracle ``U_H``, the state
preparation unitary ``U_I`` with ``U_I|0^n⟩ = |φ_0⟩``, and the dense eigendecomposition
used to certify fidelities and energies.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.stats import unitary_group

from cli.config import settings
from modules.blockenc.encoding import (
    BlockEncoding,
    encode_hermitian,
    lcu_pair_encoding,
    unitary_as_encoding,
)
from modules.exceptions import ContractViolation
from modules.hamlib.pauli import ising_terms, pauli_sum
from modules.linalg.dense import (
    HADAMARD,
    PAULI_X,
    ComplexMatrix,
    SeedLike,
    StateVector,
    as_generator,
    basis_state,
    check_register,
    kron,
    normalize,
    num_qubits,
    state_preparation_unitary,
)
from modules.linalg.eigen import eig_hermitian

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
MarkedString = Union[int, str]

# planted instances share one ground energy so sign polynomials are reused across seeds
PLANTED_GROUND_ENERGY = -0.5


@dataclass(frozen=True, eq=False)
class BenchmarkInstance:
    """A Hamiltonian with its oracles, initial state and exact spectrum."""

    family: str
    params: Dict[str, Any]
    H: ComplexMatrix
    alpha: float
    eigenvalues: FloatArray
    eigenvectors: ComplexMatrix
    initial_state: StateVector
    encoding: BlockEncoding
    state_prep: ComplexMatrix
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return int(np.log2(self.H.shape[0]))

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_state(self) -> StateVector:
        return self.eigenvectors[:, 0]

    def ground_space(self, tol: Optional[float] = None) -> ComplexMatrix:
        """Orthonormal columns spanning the eigenspace of the lowest eigenvalue."""
        tol = settings.SPECTRAL_TOL if tol is None else tol
        count = int(np.sum(self.eigenvalues <= self.eigenvalues[0] + tol))
        return self.eigenvectors[:, :count]

    @property
    def degenerate(self) -> bool:
        return self.ground_space().shape[1] > 1

    @property
    def gap(self) -> float:
        """``λ_1 − λ_0`` (zero when the ground level is degenerate)."""
        if self.eigenvalues.shape[0] < 2:
            return float("inf")
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    def fidelity(self, state: Any) -> float:
        """Norm of the projection of a normalized state onto the ground space."""
        state = np.asarray(state, dtype=complex)
        return float(np.linalg.norm(self.ground_space().conj().T @ state))

    @property
    def overlap(self) -> float:
        """``γ_true = |⟨φ_0|ψ_0⟩|``, measured on the ground space when degenerate."""
        return self.fidelity(self.initial_state)

    def truth(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "params": self.params,
            "alpha": self.alpha,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "ground_energy": self.ground_energy,
            "gap": self.gap,
            "overlap": self.overlap,
            "degenerate": self.degenerate,
        }


def build_instance(
    family: str,
    params: Dict[str, Any],
    H: Any,
    alpha: float,
    initial_state: Any,
    encoding: Optional[BlockEncoding] = None,
    state_prep: Optional[ComplexMatrix] = None,
    **extras: Any,
) -> BenchmarkInstance:
    """Diagonalize ``H`` and bundle it with its oracles."""
    H = np.asarray(H, dtype=complex)
    check_register(num_qubits(H.shape[0]))
    eigenvalues, eigenvectors = eig_hermitian(H)
    initial_state = normalize(initial_state)
    if encoding is None:
        encoding = encode_hermitian(H, alpha)
    if state_prep is None:
        state_prep = state_preparation_unitary(initial_state)
    instance = BenchmarkInstance(
        family=family,
        params=params,
        H=H,
        alpha=float(alpha),
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        initial_state=initial_state,
        encoding=encoding,
        state_prep=np.asarray(state_prep, dtype=complex),
        extras=dict(extras),
    )
    logger.info(
        f"Built {family} instance on {instance.num_qubits} qubits: "
        f"lambda0={instance.ground_energy:.6g}, gap={instance.gap:.4g}, "
        f"overlap={instance.overlap:.4g}"
    )
    return instance


def hadamard_transform(n: int) -> ComplexMatrix:
    """``H^{⊗n}``, which maps ``|0^n⟩`` to the uniform superposition ``|u⟩``."""
    return kron(*([HADAMARD] * n))


def uniform_state(n: int) -> StateVector:
    return np.full(2**n, 2 ** (-n / 2), dtype=complex)


def diffusion(n: int) -> ComplexMatrix:
    """Grover diffusion ``D = I − 2|u⟩⟨u|``."""
    u = uniform_state(n)
    return np.eye(2**n, dtype=complex) - 2.0 * np.outer(u, u.conj())


def marked_index(n: int, t: Optional[MarkedString] = None) -> int:
    """Index of the marked string; defaults to all ones."""
    if t is None:
        return 2**n - 1
    if isinstance(t, str):
        if len(t) != n or set(t) - {"0", "1"}:
            raise ContractViolation(f"marked string '{t}' is not an {n}-bit string")
        return int(t, 2)
    if not 0 <= int(t) < 2**n:
        raise ContractViolation(f"marked index {t} outside [0, {2**n})")
    return int(t)


def marked_oracle(n: int, t: Optional[MarkedString] = None) -> ComplexMatrix:
    """``U_t = I − 2|t⟩⟨t|``."""
    U = np.eye(2**n, dtype=complex)
    index = marked_index(n, t)
    U[index, index] = -1.0
    return U


def _check_qubits(n: int) -> None:
    if not 1 <= n <= 12:
        raise ContractViolation(f"n must lie in [1, 12], got {n}")
    check_register(n)


def single_qubit_encoding(a: float) -> BlockEncoding:
    """``U_H(a) = (V ⊗ I)(|0⟩⟨0| ⊗ σx + |1⟩⟨1| ⊗ I)(V† ⊗ I)`` with
    ``V(a) = [[√a, −√(1−a)], [√(1−a), √a]]``; its block is ``aσx + (1−a)I``."""
    if not 0.0 <= a <= 1.0:
        raise ContractViolation(f"a must lie in [0, 1], got {a}")
    c, s = np.sqrt(a), np.sqrt(1.0 - a)
    V = np.array([[c, -s], [s, c]], dtype=complex)
    select = np.zeros((4, 4), dtype=complex)
    select[:2, :2] = PAULI_X
    select[2:, 2:] = np.eye(2)
    left = kron(V, np.eye(2))
    unitary = left @ select @ left.conj().T
    return BlockEncoding(unitary=unitary, alpha=1.0, num_ancilla=1,
                         info={"construction": "single_qubit", "a": float(a)})


def make_single_qubit(a: float) -> BenchmarkInstance:
    """``H(a) = aσx + (1−a)I`` with eigenpairs ``(1, |+⟩)`` and ``(1−2a, |−⟩)``.

    The initial state is ``|0⟩``, whose overlap with ``|−⟩`` is ``1/√2``.
    """
    encoding = single_qubit_encoding(a)
    H = a * PAULI_X + (1.0 - a) * np.eye(2)
    instance = build_instance(
        "single_qubit", {"a": float(a)}, H, 1.0, basis_state(1, 0),
        encoding=encoding, state_prep=np.eye(2, dtype=complex),
    )
    if a == 0.0:
        logger.warning("H(0) is the identity; the ground level is degenerate")
    return instance


def make_grover_family(n: int, tau: float, t: Optional[MarkedString] = None) -> BenchmarkInstance:
    """``H(τ) = (1−τ)D + τU_t`` encoded as a two-term LCU, with initial state ``|u⟩``."""
    _check_qubits(n)
    if not 0.0 <= tau <= 1.0:
        raise ContractViolation(f"tau must lie in [0, 1], got {tau}")
    D = diffusion(n)
    U_t = marked_oracle(n, t)
    H = (1.0 - tau) * D + tau * U_t
    encoding = lcu_pair_encoding(D, U_t, tau)
    return build_instance(
        "grover", {"n": n, "tau": float(tau), "t": marked_index(n, t)}, H, 1.0,
        uniform_state(n), encoding=encoding, state_prep=hadamard_transform(n),
    )


@dataclass(frozen=True)
class GroverRestriction:
    """``H(τ)`` restricted to the non-orthogonal basis ``{|u⟩, |t⟩}``.

    ``action[i, j]`` is the coefficient of ``b_i`` in ``H b_j``; ``eigenvalues`` come from the
    generalized problem ``B c = λ G c`` with ``B_ij = ⟨b_i|H|b_j⟩`` and Gram matrix ``G``.
    """

    action: FloatArray
    gram: FloatArray
    eigenvalues: FloatArray
    coefficients: FloatArray
    bulk_value: float


def grover_restriction(n: int, tau: float) -> GroverRestriction:
    N = 2**n
    c = 1.0 / np.sqrt(N)
    action = np.array(
        [[2.0 * tau - 1.0, -2.0 * (1.0 - tau) * c], [-2.0 * tau * c, 1.0 - 2.0 * tau]]
    )
    gram = np.array([[1.0, c], [c, 1.0]])
    B = gram @ action
    B = 0.5 * (B + B.T)
    eigenvalues, coefficients = scipy.linalg.eigh(B, gram)
    return GroverRestriction(
        action=action, gram=gram, eigenvalues=eigenvalues, coefficients=coefficients,
        bulk_value=1.0,
    )


@dataclass(frozen=True)
class AvoidedCrossingTruth:
    """Exact and leading-order spectral data of ``H(1/2 − N^{−1/2+δ})``."""

    n: int
    delta_exp: float
    tau: float
    lambda_plus: float
    lambda_minus: float
    gap: float
    gap_leading: float
    ground_coefficients: Tuple[float, float]
    overlap_t: float
    overlap_leading: float


def avoided_crossing_truth(n: int, delta_exp: float) -> AvoidedCrossingTruth:
    """Closed forms near the avoided crossing of the Grover family.

    ``λ_± = ±N^{δ−1/2}√(4 + N^{−2δ} − 4/N)``, gap ``≈ 4N^{δ−1/2}``, and ground state
    ``|u⟩ + ¼N^{−δ}|t⟩`` to leading order, whose overlap with ``|t⟩`` is ``≈ ¼N^{−δ}``.
    """
    _check_qubits(n)
    if not 0.0 < delta_exp < 1.0 / 6.0:
        raise ContractViolation(f"delta_exp must lie in (0, 1/6), got {delta_exp}")
    N = float(2**n)
    scale = N ** (delta_exp - 0.5)
    tau = 0.5 - scale
    lam = scale * np.sqrt(4.0 + N ** (-2.0 * delta_exp) - 4.0 / N)

    restriction = grover_restriction(n, tau)
    coeffs = restriction.coefficients[:, 0]
    x_u, x_t = coeffs / coeffs[0]
    c = 1.0 / np.sqrt(N)
    norm = np.sqrt(x_u**2 + x_t**2 + 2.0 * x_u * x_t * c)
    overlap_t = abs(x_u * c + x_t) / norm

    return AvoidedCrossingTruth(
        n=n,
        delta_exp=delta_exp,
        tau=tau,
        lambda_plus=float(lam),
        lambda_minus=float(-lam),
        gap=float(2.0 * lam),
        gap_leading=float(4.0 * scale),
        ground_coefficients=(float(x_u), float(x_t)),
        overlap_t=float(overlap_t),
        overlap_leading=float(0.25 * N ** (-delta_exp)),
    )


def _marked_set(n: int, marked: Iterable[MarkedString]) -> Tuple[int, ...]:
    indices = tuple(sorted({marked_index(n, s) for s in marked}))
    if not 0 < len(indices) < 2**n:
        raise ContractViolation("the marked set must be a nonempty proper subset")
    return indices


def make_counting(n: int, marked: Iterable[MarkedString]) -> BenchmarkInstance:
    """Counting Hamiltonian ``½(D − U_f D U_f)`` with ``U_f = I − 2Σ_{s∈S}|s⟩⟨s|``.

    ``U_H = (H ⊗ I)[|0⟩⟨0| ⊗ D − |1⟩⟨1| ⊗ U_f D U_f](H ⊗ I)``. The nonzero spectrum is
    ``±2a√(1−a²)`` with ``a = √(|S|/N)``; the ground state is ``(|u_0⟩ + |u_1⟩)/√2``.
    """
    _check_qubits(n)
    indices = _marked_set(n, marked)
    D = diffusion(n)
    U_f = np.eye(2**n, dtype=complex)
    U_f[indices, indices] = -1.0
    F = U_f @ D @ U_f
    unitary = 0.5 * np.block([[D - F, D + F], [D + F, D - F]])
    encoding = BlockEncoding(unitary=unitary, alpha=1.0, num_ancilla=1,
                             info={"construction": "counting"})
    H = 0.5 * (D - F)
    a = np.sqrt(len(indices) / 2**n)
    return build_instance(
        "counting", {"n": n, "marked": list(indices)}, H, 1.0, uniform_state(n),
        encoding=encoding, state_prep=hadamard_transform(n),
        a=float(a), predicted_eigenvalue=float(2.0 * a * np.sqrt(1.0 - a * a)),
    )


def make_marked_oracle(n: int, t: Optional[MarkedString] = None) -> BenchmarkInstance:
    """``U_t`` as its own (1, 0, 0)-block-encoding; ground state ``|t⟩`` with overlap ``1/√N``."""
    _check_qubits(n)
    U_t = marked_oracle(n, t)
    return build_instance(
        "marked", {"n": n, "t": marked_index(n, t)}, U_t, 1.0, uniform_state(n),
        encoding=unitary_as_encoding(U_t), state_prep=hadamard_transform(n),
    )


def _random_frame(n: int, rng: np.random.Generator) -> ComplexMatrix:
    return unitary_group.rvs(2**n, random_state=rng)


def _state_with_weight(
    frame: ComplexMatrix, low: int, gamma: float, rng: np.random.Generator
) -> StateVector:
    """State with weight ``γ²`` on the first ``low`` frame vectors and the rest elsewhere."""
    dim = frame.shape[0]
    inside = rng.standard_normal(low) + 1j * rng.standard_normal(low)
    outside = rng.standard_normal(dim - low) + 1j * rng.standard_normal(dim - low)
    coefficients = np.concatenate(
        (gamma * inside / np.linalg.norm(inside),
         np.sqrt(1.0 - gamma * gamma) * outside / np.linalg.norm(outside))
    )
    return frame @ coefficients


def make_random_gapped(
    n: int,
    gamma_plant: float,
    delta_plant: float,
    rng: SeedLike,
    ground_energy: float = PLANTED_GROUND_ENERGY,
) -> BenchmarkInstance:
    """Random Hamiltonian with planted spectrum ``(λ_0, λ_0 + Δ, uniform above)`` and an
    initial state of exact overlap ``γ`` with the ground state; ``α = 1``."""
    _check_qubits(n)
    if not 0.0 < gamma_plant <= 1.0:
        raise ContractViolation(f"gamma_plant must lie in (0, 1], got {gamma_plant}")
    top = 0.9
    if not 0.0 < delta_plant < top - ground_energy:
        raise ContractViolation(
            f"delta_plant must lie in (0, {top - ground_energy}), got {delta_plant}"
        )
    rng = as_generator(rng)
    dim = 2**n
    frame = _random_frame(n, rng)
    first = ground_energy + delta_plant
    spectrum = np.concatenate(([ground_energy, first], np.sort(rng.uniform(first, top, dim - 2))))
    H = (frame * spectrum[np.newaxis, :]) @ frame.conj().T
    H = 0.5 * (H + H.conj().T)
    initial = _state_with_weight(frame, 1, gamma_plant, rng)
    return build_instance(
        "random_gapped",
        {"n": n, "gamma_plant": float(gamma_plant), "delta_plant": float(delta_plant)},
        H, 1.0, initial,
    )


def make_random_gapless(
    n: int,
    gamma_plant: float,
    rng: SeedLike,
    degeneracy: int = 1,
    spread: float = 1.2,
    ground_energy: float = PLANTED_GROUND_ENERGY,
) -> BenchmarkInstance:
    """Random Hamiltonian with a dense low spectrum and no gap promise.

    The lowest level has the given multiplicity; the initial state has weight ``γ²`` on
    that level.
    """
    _check_qubits(n)
    dim = 2**n
    if not 1 <= degeneracy < dim:
        raise ContractViolation(f"degeneracy must lie in [1, {dim}), got {degeneracy}")
    if ground_energy + spread > 1.0:
        raise ContractViolation("spectrum must stay inside [-1, 1]")
    rng = as_generator(rng)
    frame = _random_frame(n, rng)
    rest = ground_energy + np.sort(rng.uniform(0.0, spread, dim - degeneracy))
    spectrum = np.concatenate((np.full(degeneracy, ground_energy), rest))
    H = (frame * spectrum[np.newaxis, :]) @ frame.conj().T
    H = 0.5 * (H + H.conj().T)
    initial = _state_with_weight(frame, degeneracy, gamma_plant, rng)
    return build_instance(
        "random_gapless",
        {"n": n, "gamma_plant": float(gamma_plant), "degeneracy": degeneracy,
         "spread": float(spread)},
        H, 1.0, initial,
    )


def make_transverse_field_ising(
    n: int, coupling: float = 1.0, field: float = 1.0, periodic: bool = False,
    initial: str = "zero",
) -> BenchmarkInstance:
    """``−J Σ Z_i Z_{i+1} − g Σ X_i`` with ``α = Σ|c_j|`` and initial ``|0^n⟩`` or ``|+^n⟩``."""
    _check_qubits(n)
    H, alpha = pauli_sum(ising_terms(n, coupling, field, periodic))
    if initial == "zero":
        state, prep = basis_state(n, 0), np.eye(2**n, dtype=complex)
    elif initial == "plus":
        state, prep = uniform_state(n), hadamard_transform(n)
    else:
        raise ContractViolation(f"unknown initial state '{initial}'")
    return build_instance(
        "ising",
        {"n": n, "coupling": coupling, "field": field, "periodic": periodic, "initial": initial},
        H, alpha, state, state_prep=prep,
    )


def search_reduction_probability(state: Any, t: int) -> float:
    """Probability of reading the marked string ``t`` when measuring ``state``."""
    state = np.asarray(state, dtype=complex)
    return float(abs(state[t]) ** 2)
