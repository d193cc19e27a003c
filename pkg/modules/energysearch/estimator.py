"""Binary amplitude estimation.

Decides whether the flagged amplitude ``A`` of a circuit lies below ``γ_0`` or above
``γ_1`` by phase estimation on the Grover iterate followed by a majority vote. Phase
estimation with ``M`` evaluation points returns ``y`` with probability

    P(y) = ½[F(y − Mθ/π) + F(y + Mθ/π)],   F(x) = sin²(πx) / (M² sin²(πx/M)),

where ``A = sin θ``; the estimate is ``sin(πy/M)``.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import numpy.typing as npt

from cli.config import settings
from cli.models import AeMode
from modules.blockenc.encoding import QueryCost, QueryLedger
from modules.exceptions import ContractViolation
from modules.groundprep.amplification import FlaggedCircuit
from modules.linalg.dense import SeedLike, as_generator

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


def evaluation_points(gap: float) -> int:
    """``M = 2^⌈log2(4π/Δ)⌉``, enough to estimate ``A`` to ``Δ/4``."""
    if gap <= 0.0:
        raise ContractViolation(f"amplitude gap must be positive, got {gap}")
    return int(2 ** int(np.ceil(np.log2(4.0 * np.pi / gap))))


def vote_repetitions(delta: float) -> int:
    """``r = ⌈c·ln(1/δ)⌉`` majority-vote repetitions."""
    if not 0.0 < delta < 1.0:
        raise ContractViolation(f"failure budget must lie in (0, 1), got {delta}")
    return max(1, int(np.ceil(settings.AE_VOTE_CONSTANT * np.log(1.0 / delta))))


@dataclass(frozen=True)
class AeConfig:
    """Binary amplitude estimation settings.

    Attributes:
        mode: Back end
        gap: Promise gap ``γ_1 − γ_0``
        delta: Failure budget per call
        repetitions: Majority-vote count ``r``
        points: Phase-estimation evaluation points ``M``
    """

    mode: AeMode
    gap: float
    delta: float
    repetitions: int
    points: int

    @classmethod
    def create(cls, mode: AeMode, gap: float, delta: float,
               repetitions: Optional[int] = None) -> "AeConfig":
        return cls(
            mode=AeMode(mode),
            gap=gap,
            delta=delta,
            repetitions=vote_repetitions(delta) if repetitions is None else repetitions,
            points=evaluation_points(gap),
        )

    @classmethod
    def for_search(cls, mode: AeMode, gamma: float, alpha: float, h: float,
                   vartheta: float) -> "AeConfig":
        """Settings for the energy search: gap ``γ/2`` and ``δ = ϑ / (2 log2(4α/h))``."""
        if not 0.0 < vartheta < 1.0:
            raise ContractViolation(f"vartheta must lie in (0, 1), got {vartheta}")
        delta = vartheta / (2.0 * np.log2(4.0 * alpha / h))
        return cls.create(mode, gamma / 2.0, delta)


@dataclass
class AeOutcome:
    """Result of one binary amplitude estimate."""

    bit: int
    amplitude: float
    estimates: List[float] = field(default_factory=list)
    votes: int = 0
    ambiguous: bool = False


def fejer_distribution(amplitude: float, points: int) -> FloatArray:
    """Exact phase-estimation outcome distribution for flagged amplitude ``A``."""
    theta = float(np.arcsin(np.clip(amplitude, 0.0, 1.0)))
    y = np.arange(points)
    center = points * theta / np.pi

    def kernel(x: FloatArray) -> FloatArray:
        denominator = points**2 * np.sin(np.pi * x / points) ** 2
        value = np.ones_like(x)
        mask = np.abs(denominator) > 1e-300
        value[mask] = np.sin(np.pi * x[mask]) ** 2 / denominator[mask]
        return value

    probabilities = 0.5 * (kernel(y - center) + kernel(y + center))
    return probabilities / probabilities.sum()


def circuit_distribution(circuit: FlaggedCircuit, points: int) -> FloatArray:
    """Outcome distribution of phase estimation on the Grover iterate of ``circuit``.

    The register ``Σ_y |y⟩ ⊗ (1/M) Σ_k e^{−2πiky/M} Q^k A|0⟩`` is formed from the powers
    ``Q^k A|0⟩`` and a Fourier transform over ``k``.
    """
    powers = np.empty((points, circuit.dim), dtype=complex)
    state = circuit.output()
    for k in range(points):
        powers[k] = state
        state = circuit.grover_step(state)
    amplitudes = np.fft.fft(powers, axis=0) / points
    probabilities = np.sum(np.abs(amplitudes) ** 2, axis=1)
    return probabilities / probabilities.sum()


def _record(ledger: Optional[QueryLedger], cost: Optional[QueryCost], cfg: AeConfig) -> None:
    # M forward and M − 1 inverse applications per estimate
    if ledger is None or cost is None:
        return
    ledger.record_cost(cost, cfg.points * cfg.repetitions)
    ledger.record_cost(cost.inverse(), (cfg.points - 1) * cfg.repetitions)


def binary_amplitude_estimate(
    circuit: Optional[FlaggedCircuit],
    gamma0: float,
    gamma1: float,
    cfg: AeConfig,
    rng: SeedLike,
    ledger: Optional[QueryLedger] = None,
    amplitude: Optional[float] = None,
    cost: Optional[QueryCost] = None,
) -> AeOutcome:
    """Return 0 if ``A < γ_0`` and 1 if ``A > γ_1``, correct with probability ``1 − δ``.

    Args:
        circuit: Flagged circuit; may be omitted in the model modes when ``amplitude`` is given
        gamma0: Lower threshold
        gamma1: Upper threshold
        cfg: Estimation settings
        rng: Explicit seed or generator
        ledger: Receives ``r·M`` forward and ``r·(M − 1)`` inverse circuit applications
        amplitude: Flagged amplitude, computed from the circuit when omitted
        cost: Per-application cost to record, defaults to the circuit's cost

    Returns:
        The decided bit; ``ambiguous`` marks calls where the promise does not hold
    """
    if not 0.0 <= gamma0 < gamma1 <= 1.0:
        raise ContractViolation(f"thresholds must satisfy 0 <= gamma0 < gamma1 <= 1, got "
                                f"({gamma0}, {gamma1})")
    if amplitude is None:
        if circuit is None:
            raise ContractViolation("either a circuit or an amplitude is required")
        amplitude = circuit.amplitude
    rng = as_generator(rng)
    midpoint = 0.5 * (gamma0 + gamma1)
    ambiguous = gamma0 <= amplitude <= gamma1
    if ambiguous:
        logger.debug(
            f"Amplitude {amplitude:.4g} inside the promise gap [{gamma0:.4g}, {gamma1:.4g}]"
        )
    if cost is None and circuit is not None:
        cost = circuit.cost
    _record(ledger, cost, cfg)

    if cfg.mode == AeMode.ORACLE_THRESHOLD:
        return AeOutcome(bit=int(amplitude > midpoint), amplitude=amplitude, ambiguous=ambiguous)

    if cfg.mode == AeMode.STATISTICAL_MODEL:
        distribution = fejer_distribution(amplitude, cfg.points)
    elif cfg.mode == AeMode.CIRCUIT_QPE:
        if circuit is None:
            raise ContractViolation("circuit_qpe mode needs the circuit")
        system_qubits = int(np.log2(circuit.good_dim))
        if system_qubits > settings.CIRCUIT_QPE_MAX_QUBITS:
            raise ContractViolation(
                f"circuit_qpe is limited to {settings.CIRCUIT_QPE_MAX_QUBITS} system qubits, "
                f"got {system_qubits}"
            )
        distribution = circuit_distribution(circuit, cfg.points)
    else:
        raise ContractViolation(f"unknown amplitude estimation mode '{cfg.mode}'")

    outcomes = rng.choice(cfg.points, size=cfg.repetitions, p=distribution)
    estimates = np.sin(np.pi * outcomes / cfg.points)
    votes = int(np.sum(estimates > midpoint))
    # ties go to 0
    bit = int(2 * votes > cfg.repetitions)
    return AeOutcome(bit=bit, amplitude=amplitude, estimates=estimates.tolist(), votes=votes,
                     ambiguous=ambiguous)
