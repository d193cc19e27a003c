"""Pauli-string assembly of dense Hamiltonians."""

import logging
from typing import Iterable, Mapping, Sequence, Tuple, Union

import numpy as np

from modules.exceptions import MalformedInput
from modules.linalg.dense import PAULI_X, PAULI_Y, PAULI_Z, ComplexMatrix, check_register, kron

logger = logging.getLogger(__name__)

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
}

PauliTerms = Union[Mapping[str, float], Iterable[Tuple[float, str]]]


def pauli_string_matrix(paulis: str) -> ComplexMatrix:
    """Dense matrix of a Pauli string such as ``"XIZ"``, qubit 0 leftmost."""
    if not paulis:
        raise MalformedInput("empty Pauli string")
    try:
        factors = [PAULIS[p] for p in paulis.upper()]
    except KeyError as e:
        raise MalformedInput(f"unknown Pauli letter {e} in '{paulis}'") from e
    check_register(len(paulis))
    return kron(*factors)


def _normalize_terms(terms: PauliTerms) -> Sequence[Tuple[float, str]]:
    if isinstance(terms, Mapping):
        return [(float(coeff), paulis) for paulis, coeff in terms.items()]
    return [(float(coeff), paulis) for coeff, paulis in terms]


def pauli_sum(terms: PauliTerms) -> Tuple[ComplexMatrix, float]:
    """Assemble ``H = Σ c_j P_j`` and the LCU normalization ``α = Σ |c_j|``.

    Args:
        terms: ``{"ZZ": 1.0, ...}`` or an iterable of ``(coeff, "ZZ")`` pairs

    Returns:
        Tuple of the dense Hamiltonian and ``alpha``

    Raises:
        MalformedInput: On empty input, unknown letters or mixed string lengths
    """
    pairs = _normalize_terms(terms)
    if not pairs:
        raise MalformedInput("no Pauli terms given")
    widths = {len(p) for _, p in pairs}
    if len(widths) != 1:
        raise MalformedInput(f"Pauli strings have mixed lengths {sorted(widths)}")

    H = np.zeros((2 ** widths.pop(),) * 2, dtype=complex)
    for coeff, paulis in pairs:
        H += coeff * pauli_string_matrix(paulis)
    alpha = float(sum(abs(c) for c, _ in pairs))
    logger.debug(f"Assembled {len(pairs)} Pauli terms, alpha={alpha}")
    return H, alpha


def ising_terms(
    n: int, coupling: float, field: float, periodic: bool = False
) -> Sequence[Tuple[float, str]]:
    """Terms of ``−J Σ Z_i Z_{i+1} − g Σ X_i`` on a chain of ``n`` sites."""
    terms = []
    bonds = n if periodic and n > 2 else n - 1
    for i in range(bonds):
        letters = ["I"] * n
        letters[i] = "Z"
        letters[(i + 1) % n] = "Z"
        terms.append((-coupling, "".join(letters)))
    for i in range(n):
        letters = ["I"] * n
        letters[i] = "X"
        terms.append((-field, "".join(letters)))
    return [(c, p) for c, p in terms if c != 0.0]
