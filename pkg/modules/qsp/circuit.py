"""Assembly of the QSP circuit acting on a block-encoding.

The circuit is ``W = (H ⊗ I) [|0⟩⟨0| ⊗ U_Φ + |1⟩⟨1| ⊗ U_{−Φ}] (H ⊗ I)`` with

    U_Φ = Π_0 U Π_1 U† Π_2 U … U Π_d,   Π_j = e^{iφ_j (2Π − I)},   Π = |0^m⟩⟨0^m| ⊗ I,

so its block on the all-zero signal and block ancillas is ``(P(A/α) + P̄(A/α))/2 =
Re P(A/α)``. Layers are built as dense matrices; each rotation layer is diagonal.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from modules.blockenc.encoding import BlockEncoding, QueryCost, QueryLedger
from modules.linalg.dense import ComplexMatrix, check_register
from modules.qsp.phases import PhaseFactorSequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class QspCircuit:
    """An assembled QSP circuit and the encoding it consumes."""

    phases: PhaseFactorSequence
    encoding: BlockEncoding
    unitary: ComplexMatrix

    @property
    def num_qubits(self) -> int:
        return 1 + self.encoding.num_qubits

    @property
    def num_ancilla(self) -> int:
        return 1 + self.encoding.num_ancilla

    @property
    def query_cost(self) -> QueryCost:
        """``(d+1)/2`` forward and ``(d−1)/2`` inverse uses of the encoding."""
        d = self.phases.degree
        forward = self.encoding.cost.scaled((d + 1) // 2)
        inverse = self.encoding.cost.inverse().scaled(d // 2)
        total = forward + inverse
        return QueryCost(counts=total.counts, gates=self.num_ancilla * d)

    def block(self) -> ComplexMatrix:
        dim = self.encoding.system_dim
        return self.unitary[:dim, :dim]

    def as_block_encoding(self, epsilon: float, **info: object) -> BlockEncoding:
        merged = dict(self.encoding.info)
        merged.update({"degree": self.phases.degree, **info})
        return BlockEncoding(
            unitary=self.unitary,
            alpha=1.0,
            num_ancilla=self.num_ancilla,
            epsilon=epsilon,
            ledger_tag=self.encoding.ledger_tag,
            cost=self.query_cost,
            info=merged,
        )


def assemble_qsp_unitary(
    be: BlockEncoding, phases: PhaseFactorSequence, ledger: Optional[QueryLedger] = None
) -> QspCircuit:
    """Build the QSP circuit realizing ``Re P(A/α)`` from ``be`` and ``phases``.

    Args:
        be: Block-encoding of a Hermitian operator
        phases: Reflection-convention phases of odd degree ``d``
        ledger: When given, one application's queries are recorded

    Returns:
        The assembled circuit on ``1 + m + n`` qubits

    Raises:
        QubitBudgetExceeded: If the circuit register exceeds the dense cap
    """
    check_register(1 + be.num_qubits)
    U = be.unitary
    U_dag = U.conj().T
    dim = U.shape[0]

    # 2Π − I is +1 on the all-zero ancilla block and −1 elsewhere
    reflection = -np.ones(dim)
    reflection[: be.system_dim] = 1.0
    signs = np.array([1.0, -1.0])[:, np.newaxis]

    def layer(angle: float) -> np.ndarray:
        return np.exp(1j * angle * signs * reflection[np.newaxis, :])

    # both signal branches at once: stack of shape (2, dim, dim)
    branches = np.zeros((2, dim, dim), dtype=complex)
    first = layer(phases.phases[0])
    branches[0][np.diag_indices(dim)] = first[0]
    branches[1][np.diag_indices(dim)] = first[1]
    for j, angle in enumerate(phases.phases[1:], start=1):
        oracle = U if j % 2 == 1 else U_dag
        branches = (branches @ oracle) * layer(angle)[:, np.newaxis, :]

    plus, minus = branches[0], branches[1]
    unitary = np.empty((2 * dim, 2 * dim), dtype=complex)
    unitary[:dim, :dim] = 0.5 * (plus + minus)
    unitary[:dim, dim:] = 0.5 * (plus - minus)
    unitary[dim:, :dim] = 0.5 * (plus - minus)
    unitary[dim:, dim:] = 0.5 * (plus + minus)

    circuit = QspCircuit(phases=phases, encoding=be, unitary=unitary)
    if ledger is not None:
        ledger.record_cost(circuit.query_cost)
    logger.debug(f"Assembled QSP circuit of degree {phases.degree} on {circuit.num_qubits} qubits")
    return circuit
