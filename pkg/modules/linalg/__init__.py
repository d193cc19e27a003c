"""Dense complex linear algebra substrate: matrices, states, eigensolvers, measurement."""

from modules.linalg.dense import (
    HADAMARD,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    ComplexMatrix,
    SeedLike,
    StateVector,
    apply,
    as_generator,
    basis_state,
    check_register,
    expectation,
    is_hermitian,
    is_unitary,
    kron,
    marginal_probabilities,
    matrix_from_json,
    matrix_to_json,
    measure,
    normalize,
    num_qubits,
    operator_norm_diff,
    sample_outcomes,
    state_preparation_unitary,
)
from modules.linalg.eigen import eig_hermitian, jacobi_eigh, reassemble

__all__ = [
    "HADAMARD",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "ComplexMatrix",
    "SeedLike",
    "StateVector",
    "apply",
    "as_generator",
    "basis_state",
    "check_register",
    "eig_hermitian",
    "expectation",
    "is_hermitian",
    "is_unitary",
    "jacobi_eigh",
    "kron",
    "marginal_probabilities",
    "matrix_from_json",
    "matrix_to_json",
    "measure",
    "normalize",
    "num_qubits",
    "operator_norm_diff",
    "reassemble",
    "sample_outcomes",
    "state_preparation_unitary",
]
