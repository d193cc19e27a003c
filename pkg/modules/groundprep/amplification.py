"""Amplitude amplification on success-flagged circuits.

A :class:`FlaggedCircuit` ``A`` acts on ``ancillas ⊗ system``; its success flag is "all
ancillas read 0", i.e. the leading ``good_dim`` entries of the register. The Grover iterate
``Q = −A S_0 A† S_χ`` rotates ``A|0⟩`` towards the flagged subspace by ``2·arcsin a`` per
application, where ``a`` is the flagged amplitude.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from cli.config import settings
from modules.blockenc.encoding import QueryCost, QueryLedger
from modules.exceptions import AmplificationError, ContractViolation
from modules.linalg.dense import (
    ComplexMatrix,
    SeedLike,
    StateVector,
    as_generator,
    check_register,
    num_qubits,
)

logger = logging.getLogger(__name__)

# growth factor of the unknown-amplitude schedule
SCHEDULE_GROWTH = 6.0 / 5.0


@dataclass(frozen=True, eq=False)
class FlaggedCircuit:
    """A circuit whose success flag is the all-zero ancilla readout.

    ``reflection_cost`` is the cost of one query to the reflector that marks the good
    subspace; each Grover iteration spends it once forward and once inverted.
    """

    unitary: ComplexMatrix
    good_dim: int
    cost: QueryCost = field(default_factory=QueryCost)
    reflection_cost: QueryCost = field(default_factory=QueryCost)

    def __post_init__(self) -> None:
        dim = self.unitary.shape[0]
        check_register(num_qubits(dim))
        if self.good_dim < 1 or dim % self.good_dim:
            raise ContractViolation(f"flagged block of size {self.good_dim} in dimension {dim}")

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    def output(self) -> StateVector:
        """``A|0⟩``."""
        return self.unitary[:, 0].copy()

    @property
    def amplitude(self) -> float:
        """Norm of the flagged part of ``A|0⟩``."""
        return float(np.linalg.norm(self.unitary[: self.good_dim, 0]))

    def flagged_state(self, state: StateVector) -> StateVector:
        return state[: self.good_dim]

    def flagged_probability(self, state: StateVector) -> float:
        return float(np.vdot(state[: self.good_dim], state[: self.good_dim]).real)

    def grover_step(self, state: StateVector) -> StateVector:
        """One application of ``Q = −A S_0 A† S_χ``."""
        v = state.copy()
        v[: self.good_dim] *= -1.0
        v = self.unitary.conj().T @ v
        v[0] *= -1.0
        return -(self.unitary @ v)

    def iterate(self, iterations: int) -> StateVector:
        state = self.output()
        for _ in range(iterations):
            state = self.grover_step(state)
        return state

    def record(self, ledger: QueryLedger, iterations: int) -> None:
        """One initial ``A``, then ``A†``, ``A`` and the reflector and its inverse per Grover
        iteration."""
        ledger.record_cost(self.cost, 1 + iterations)
        ledger.record_cost(self.cost.inverse(), iterations)
        ledger.record_cost(self.reflection_cost, iterations)
        ledger.record_cost(self.reflection_cost.inverse(), iterations)


@dataclass
class AmplificationResult:
    """Outcome of amplitude amplification.

    ``state`` is the normalized system state on success; ``success_probability`` is the
    flagged probability of the final register state before it was measured.
    """

    state: StateVector
    iterations: int
    rounds: int
    success_probability: float
    ledger: QueryLedger


def deterministic_iterations(amplitude: float) -> int:
    """``k = ⌊π / (4·arcsin a)⌋``."""
    if amplitude <= 0.0:
        raise AmplificationError("flagged amplitude is zero, amplification cannot progress", 0)
    theta = float(np.arcsin(min(amplitude, 1.0)))
    return int(np.floor(np.pi / (4.0 * theta)))


def amplified_probability(amplitude: float, iterations: int) -> float:
    """``sin²((2k+1)·arcsin a)``."""
    theta = float(np.arcsin(min(amplitude, 1.0)))
    return float(np.sin((2 * iterations + 1) * theta) ** 2)


def _measure_flag(
    circuit: FlaggedCircuit, state: StateVector, rng: np.random.Generator
) -> Optional[StateVector]:
    probability = circuit.flagged_probability(state)
    if rng.random() < probability:
        flagged = circuit.flagged_state(state)
        return flagged / np.linalg.norm(flagged)
    return None


def amplitude_amplify(
    circuit: FlaggedCircuit,
    rng: SeedLike,
    known_amplitude: Optional[float] = None,
    amplitude_floor: Optional[float] = None,
    max_rounds: Optional[int] = None,
) -> AmplificationResult:
    """Amplify and measure the success flag until it reads success.

    With ``known_amplitude`` the deterministic count ``k = ⌊π/(4 arcsin a)⌋`` is used and the
    whole procedure is repeated on failure. Without it the exponential-guess schedule draws
    ``j`` uniformly from ``[0, m)`` and grows ``m`` by 6/5 after each failure, capping ``m`` at
    ``1/amplitude_floor`` (or ``√dim``).

    Args:
        circuit: Flagged circuit ``A``
        rng: Explicit seed or generator
        known_amplitude: Flagged amplitude ``a`` if known
        amplitude_floor: Smallest amplitude the schedule must cover
        max_rounds: Round cap, defaults to the configured retry cap

    Returns:
        The flagged state with iteration and round counts and the queries spent

    Raises:
        AmplificationError: If no round succeeds within the cap
    """
    rng = as_generator(rng)
    max_rounds = settings.AMPLIFICATION_RETRY_CAP if max_rounds is None else max_rounds
    ledger = QueryLedger()
    total_iterations = 0

    if known_amplitude is not None:
        k = deterministic_iterations(known_amplitude)
        logger.info(f"Deterministic amplification: a={known_amplitude:.4g}, k={k}")
        final = circuit.iterate(k)
        probability = circuit.flagged_probability(final)
        for attempt in range(1, max_rounds + 1):
            circuit.record(ledger, k)
            total_iterations += k
            flagged = _measure_flag(circuit, final, rng)
            if flagged is not None:
                return AmplificationResult(flagged, total_iterations, attempt, probability, ledger)
            logger.debug(f"Flag read failure on attempt {attempt}, repeating")
        logger.error(f"Deterministic amplification failed {max_rounds} times")
        raise AmplificationError("flag never read success", max_rounds)

    cap = 1.0 / amplitude_floor if amplitude_floor else float(np.sqrt(circuit.dim))
    m = 1.0
    for attempt in range(1, max_rounds + 1):
        j = int(rng.integers(0, int(np.ceil(m))))
        state = circuit.iterate(j)
        circuit.record(ledger, j)
        total_iterations += j
        flagged = _measure_flag(circuit, state, rng)
        if flagged is not None:
            probability = circuit.flagged_probability(state)
            logger.info(
                f"Schedule succeeded in round {attempt} after {total_iterations} iterations"
            )
            return AmplificationResult(flagged, total_iterations, attempt, probability, ledger)
        m = min(SCHEDULE_GROWTH * m, cap)
    logger.error(f"Exponential schedule made no progress in {max_rounds} rounds")
    raise AmplificationError("flag never read success", max_rounds)


def estimate_raw_success(circuit: FlaggedCircuit, shots: int, rng: SeedLike) -> float:
    """Frequency of the success flag over ``shots`` independent runs of ``A|0⟩``."""
    if shots < 1:
        raise ContractViolation(f"shots must be positive, got {shots}")
    rng = as_generator(rng)
    return float(rng.binomial(shots, min(1.0, circuit.amplitude**2)) / shots)
