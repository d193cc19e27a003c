"""Block-encodings and query accounting.

A :class:`BlockEncoding` is a unitary on ``m`` ancilla and ``n`` system qubits (ancillas most
significant) whose leading ``2^n x 2^n`` block equals ``A / alpha`` up to ``epsilon``.
Every encoding carries the :class:`QueryCost` of one application in terms of the base
oracles, and a :class:`QueryLedger` accumulates those costs during a run.
"""

import logging
import threading
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from cli.config import settings
from modules.exceptions import ContractViolation, DimensionMismatch
from modules.linalg.dense import (
    ComplexMatrix,
    _as_square,
    check_register,
    is_unitary,
    num_qubits,
    operator_norm_diff,
)
from modules.linalg.eigen import eig_hermitian, reassemble

logger = logging.getLogger(__name__)


class OracleTag(str, Enum):
    """Base oracles whose queries are counted."""
    U_H = "U_H"
    U_I = "U_I"
    OTHER = "other"


class Direction(str, Enum):
    """Whether an oracle is applied forward or as its inverse."""
    FORWARD = "forward"
    INVERSE = "inverse"


QueryKey = Tuple[OracleTag, Direction, bool]


@dataclass(frozen=True)
class QueryCost:
    """Base-oracle queries and estimated gates of one application of a circuit."""

    counts: Tuple[Tuple[QueryKey, int], ...] = ()
    gates: int = 0

    @classmethod
    def single(cls, tag: OracleTag, direction: Direction = Direction.FORWARD,
               controlled: bool = False) -> "QueryCost":
        return cls(counts=(((tag, direction, controlled), 1),))

    def as_counter(self) -> Counter:
        counter: Counter = Counter()
        for key, value in self.counts:
            counter[key] += value
        return counter

    @staticmethod
    def _from_counter(counter: Counter, gates: int) -> "QueryCost":
        items = sorted(counter.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value, kv[0][2]))
        return QueryCost(counts=tuple((k, v) for k, v in items if v), gates=gates)

    def __add__(self, other: "QueryCost") -> "QueryCost":
        return self._from_counter(self.as_counter() + other.as_counter(), self.gates + other.gates)

    def scaled(self, times: int) -> "QueryCost":
        counter = Counter({k: v * times for k, v in self.as_counter().items()})
        return self._from_counter(counter, self.gates * times)

    def inverse(self) -> "QueryCost":
        """Cost of the adjoint circuit: every query flips direction."""
        counter: Counter = Counter()
        for (tag, direction, controlled), value in self.counts:
            flipped = Direction.INVERSE if direction == Direction.FORWARD else Direction.FORWARD
            counter[(tag, flipped, controlled)] += value
        return self._from_counter(counter, self.gates)

    def controlled(self) -> "QueryCost":
        """Cost of the singly controlled circuit: every query becomes controlled."""
        counter: Counter = Counter()
        for (tag, direction, _), value in self.counts:
            counter[(tag, direction, True)] += value
        return self._from_counter(counter, self.gates)

    def total(self, tag: OracleTag) -> int:
        return sum(v for (t, _, _), v in self.counts if t == tag)


class QueryLedger:
    """Thread-safe counters of oracle queries keyed by (tag, direction, controlled)."""

    def __init__(self) -> None:
        self._counts: Counter = Counter()
        self._gates = 0
        self._lock = threading.Lock()

    def record(self, tag: OracleTag, direction: Direction = Direction.FORWARD,
               controlled: bool = False, count: int = 1) -> None:
        if count < 0:
            raise ContractViolation("query counts cannot decrease")
        with self._lock:
            self._counts[(tag, direction, controlled)] += count

    def record_cost(self, cost: QueryCost, times: int = 1) -> None:
        """Add ``times`` applications of a circuit with the given cost."""
        if times < 0:
            raise ContractViolation("query counts cannot decrease")
        with self._lock:
            for key, value in cost.counts:
                self._counts[key] += value * times
            self._gates += cost.gates * times

    def add_gates(self, count: int) -> None:
        with self._lock:
            self._gates += count

    def merge(self, other: "QueryLedger") -> "QueryLedger":
        """Add another ledger's counts into this one and return self."""
        counts, gates = other._state()
        with self._lock:
            self._counts.update(counts)
            self._gates += gates
        return self

    def _state(self) -> Tuple[Counter, int]:
        with self._lock:
            return Counter(self._counts), self._gates

    def count(self, tag: OracleTag, direction: Optional[Direction] = None,
              controlled: Optional[bool] = None) -> int:
        counts, _ = self._state()
        return sum(
            v for (t, d, c), v in counts.items()
            if t == tag and (direction is None or d == direction)
            and (controlled is None or c == controlled)
        )

    def total(self, tag: OracleTag) -> int:
        return self.count(tag)

    @property
    def gates_estimate(self) -> int:
        return self._state()[1]

    def snapshot(self) -> "QueryLedger":
        copy = QueryLedger()
        copy.merge(self)
        return copy

    def to_json(self) -> Dict[str, Any]:
        """Export as ``{"U_H": {"fwd", "inv", "ctrl"}, "U_I": {...}, "gates_estimate"}``."""
        payload: Dict[str, Any] = {}
        for tag in OracleTag:
            payload[tag.value] = {
                "fwd": self.count(tag, Direction.FORWARD),
                "inv": self.count(tag, Direction.INVERSE),
                "ctrl": self.count(tag, controlled=True),
            }
        payload["gates_estimate"] = self.gates_estimate
        return payload

    def __repr__(self) -> str:
        return f"QueryLedger({self.to_json()})"


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    """An (alpha, m, epsilon) block-encoding.

    Attributes:
        unitary: Unitary on ``m + n`` qubits, ancillas most significant
        alpha: Normalization of the encoded operator
        num_ancilla: Number of ancilla qubits ``m``
        epsilon: Declared accuracy of ``alpha`` times the leading block
        ledger_tag: Oracle tag used when this encoding is itself a base oracle
        cost: Base-oracle queries consumed by one application
        info: Construction parameters (degree, mu, delta, …)
    """

    unitary: ComplexMatrix
    alpha: float
    num_ancilla: int
    epsilon: float = 0.0
    ledger_tag: OracleTag = OracleTag.U_H
    cost: QueryCost = field(default_factory=QueryCost)
    info: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        U = _as_square(self.unitary, "block-encoding unitary")
        qubits = num_qubits(U.shape[0])
        if self.num_ancilla < 0 or self.num_ancilla > qubits:
            raise DimensionMismatch(f"{self.num_ancilla} ancillas on a {qubits}-qubit unitary")
        if self.alpha <= 0.0:
            raise ContractViolation(f"alpha must be positive, got {self.alpha}")
        check_register(qubits)
        object.__setattr__(self, "unitary", U)
        if not self.cost.counts:
            object.__setattr__(self, "cost", QueryCost.single(self.ledger_tag))

    @property
    def num_qubits(self) -> int:
        return num_qubits(self.unitary.shape[0])

    @property
    def num_system(self) -> int:
        return self.num_qubits - self.num_ancilla

    @property
    def system_dim(self) -> int:
        return 2**self.num_system

    def block(self) -> ComplexMatrix:
        """Leading block ``(⟨0^m| ⊗ I) U (|0^m⟩ ⊗ I)``."""
        return self.unitary[: self.system_dim, : self.system_dim]

    def encoded(self) -> ComplexMatrix:
        """``alpha`` times the leading block."""
        return self.alpha * self.block()

    def verify(self, target: Any) -> float:
        """Operator-norm distance between the target and the encoded operator."""
        return operator_norm_diff(target, self.encoded())

    def inverse(self) -> "BlockEncoding":
        return BlockEncoding(
            unitary=self.unitary.conj().T,
            alpha=self.alpha,
            num_ancilla=self.num_ancilla,
            epsilon=self.epsilon,
            ledger_tag=self.ledger_tag,
            cost=self.cost.inverse(),
            info=dict(self.info),
        )

    def controlled(self) -> ComplexMatrix:
        """``|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U`` with the control as the new most significant qubit."""
        dim = self.unitary.shape[0]
        check_register(self.num_qubits + 1)
        matrix = np.zeros((2 * dim, 2 * dim), dtype=complex)
        matrix[:dim, :dim] = np.eye(dim)
        matrix[dim:, dim:] = self.unitary
        return matrix


def lcu_pair(op0: Any, op1: Any, weight0: float, weight1: float) -> ComplexMatrix:
    """Unitary whose ``|0⟩``-block is ``(w0·op0 + w1·op1)/(w0 + w1)`` for unitaries op0, op1.

    One new ancilla (most significant) is prepared in ``√w0|0⟩ + √w1|1⟩``, selects the
    operator, and is unprepared.
    """
    op0 = _as_square(op0)
    op1 = _as_square(op1)
    if op0.shape != op1.shape:
        raise DimensionMismatch(f"LCU operands {op0.shape} and {op1.shape} differ")
    if weight0 < 0 or weight1 < 0 or weight0 + weight1 <= 0:
        raise ContractViolation("LCU weights must be nonnegative and not both zero")
    total = weight0 + weight1
    c, s = np.sqrt(weight0 / total), np.sqrt(weight1 / total)
    dim = op0.shape[0]
    # (V† ⊗ I) SELECT (V ⊗ I) with V = [[c, -s], [s, c]]
    top_left = c * c * op0 + s * s * op1
    top_right = -c * s * op0 + s * c * op1
    bottom_left = -s * c * op0 + c * s * op1
    bottom_right = s * s * op0 + c * c * op1
    unitary = np.empty((2 * dim, 2 * dim), dtype=complex)
    unitary[:dim, :dim] = top_left
    unitary[:dim, dim:] = top_right
    unitary[dim:, :dim] = bottom_left
    unitary[dim:, dim:] = bottom_right
    return unitary


def encode_hermitian(H: Any, alpha: float, tag: OracleTag = OracleTag.U_H,
                     tol: Optional[float] = None) -> BlockEncoding:
    """One-ancilla dilation ``[[A, B], [B, −A]]`` with ``A = H/α`` and ``B = √(I − A²)``.

    Raises:
        ContractViolation: If ``H`` is not Hermitian or ``alpha < ‖H‖``
    """
    tol = settings.STRUCTURAL_TOL if tol is None else tol
    H = _as_square(H, "Hamiltonian")
    eigenvalues, eigenvectors = eig_hermitian(H, tol=tol)
    norm = float(np.max(np.abs(eigenvalues)))
    if alpha < norm - tol * max(1.0, norm):
        raise ContractViolation(f"alpha={alpha} is below the operator norm {norm:.12g}")

    scaled = np.clip(eigenvalues / alpha, -1.0, 1.0)
    A = reassemble(scaled, eigenvectors)
    B = reassemble(np.sqrt(1.0 - scaled * scaled), eigenvectors)
    unitary = np.block([[A, B], [B, -A]])
    logger.debug(f"Encoded {H.shape[0]}x{H.shape[0]} Hermitian operator with alpha={alpha}")
    return BlockEncoding(unitary=unitary, alpha=float(alpha), num_ancilla=1, epsilon=0.0,
                         ledger_tag=tag, info={"construction": "dilation"})


def shift_encoding(be: BlockEncoding, mu: float) -> BlockEncoding:
    """Encoding of ``A − μI`` with normalization ``alpha + |mu|`` and one more ancilla.

    The encoding is queried once per application, controlled on the new ancilla.
    """
    alpha_shifted = be.alpha + abs(mu)
    sign = -1.0 if mu > 0 else 1.0
    identity = sign * np.eye(be.unitary.shape[0], dtype=complex)
    unitary = lcu_pair(be.unitary, identity, be.alpha, abs(mu))
    info = dict(be.info)
    info.update({"shift": float(mu)})
    return BlockEncoding(
        unitary=unitary,
        alpha=alpha_shifted,
        num_ancilla=be.num_ancilla + 1,
        epsilon=be.epsilon,
        ledger_tag=be.ledger_tag,
        cost=be.cost.controlled() if mu != 0 else be.cost,
        info=info,
    )


def lcu_pair_encoding(U0: Any, U1: Any, weight: float,
                      tag: OracleTag = OracleTag.U_H) -> BlockEncoding:
    """(1, 1, 0)-block-encoding of ``(1 − weight)·U0 + weight·U1`` for unitaries U0, U1."""
    if not 0.0 <= weight <= 1.0:
        raise ContractViolation(f"LCU weight must lie in [0, 1], got {weight}")
    unitary = lcu_pair(U0, U1, 1.0 - weight, weight)
    return BlockEncoding(unitary=unitary, alpha=1.0, num_ancilla=1, ledger_tag=tag,
                         info={"construction": "lcu", "weight": float(weight)})


def unitary_as_encoding(U: Any, tag: OracleTag = OracleTag.U_H) -> BlockEncoding:
    """A unitary used as its own (1, 0, 0)-block-encoding."""
    U = _as_square(U, "unitary")
    if not is_unitary(U):
        raise ContractViolation("operator is not unitary")
    return BlockEncoding(unitary=U, alpha=1.0, num_ancilla=0, ledger_tag=tag,
                         info={"construction": "unitary"})
