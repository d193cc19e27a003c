"""Ground-state and low-energy state preparation by projection and amplification.

With an energy bound ``μ`` separating ``λ_0`` from ``λ_1`` by ``Δ/2`` on both sides, the
raw circuit ``PROJ(μ, Δ/(4α̃), γε)·(I ⊗ U_I)`` flags a state of fidelity at least ``1 − ε``
with amplitude at least ``γ(1 − ε/2)``. Without a gap, ``PROJ(μ − 2δ, δ/α̃, ε')`` with
``ε' = γ²δ/(8α)`` flags a state whose energy is at most ``μ``.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from modules.blockenc.encoding import BlockEncoding, OracleTag, QueryCost, QueryLedger
from modules.blockenc.reflector import make_projector
from modules.exceptions import ContractViolation
from modules.groundprep.amplification import FlaggedCircuit, amplitude_amplify
from modules.hamlib.benchmarks import BenchmarkInstance
from modules.linalg.dense import ComplexMatrix, SeedLike, StateVector, expectation, kron

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PrepProblem:
    """Oracles and promises of a preparation task.

    ``truth`` is the benchmark instance the oracles came from; it is used only to certify the
    output, never by the algorithm.
    """

    encoding: BlockEncoding
    state_prep: ComplexMatrix
    gamma: float
    eps: float
    delta_gap: Optional[float] = None
    mu: Optional[float] = None
    truth: Optional[BenchmarkInstance] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ContractViolation(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0.0 < self.eps < 1.0:
            raise ContractViolation(f"eps must lie in (0, 1), got {self.eps}")
        if self.delta_gap is not None and self.delta_gap <= 0.0:
            raise ContractViolation(f"Delta must be positive, got {self.delta_gap}")

    @classmethod
    def from_instance(
        cls,
        instance: BenchmarkInstance,
        gamma: Optional[float] = None,
        eps: float = 1e-3,
        delta_gap: Optional[float] = None,
        mu: Optional[float] = None,
    ) -> "PrepProblem":
        """Problem with promises read off the instance where not given.

        The default bound is ``μ = λ_0 + Δ/2``.
        """
        gamma = instance.overlap if gamma is None else gamma
        delta_gap = instance.gap if delta_gap is None else delta_gap
        if mu is None and np.isfinite(delta_gap):
            mu = instance.ground_energy + delta_gap / 2.0
        return cls(
            encoding=instance.encoding,
            state_prep=instance.state_prep,
            gamma=gamma,
            eps=eps,
            delta_gap=delta_gap,
            mu=mu,
            truth=instance,
        )

    @property
    def alpha(self) -> float:
        return self.encoding.alpha


@dataclass
class PrepResult:
    """Prepared state with its certification against exact ground truth."""

    state: StateVector
    fidelity: Optional[float]
    success_probability: float
    amplified_probability: float
    iterations: int
    rounds: int
    ledger: QueryLedger
    params: Dict[str, Any] = field(default_factory=dict)
    fidelity_bound: Optional[float] = None
    energy: Optional[float] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "fidelity": self.fidelity,
            "success_prob": self.success_probability,
            "fidelity_bound": self.fidelity_bound,
            "energy": self.energy,
            "ledger": self.ledger.to_json(),
            "params": self.params,
        }


def state_prep_cost() -> QueryCost:
    return QueryCost.single(OracleTag.U_I)


def flagged_projection(projector: BlockEncoding, state_prep: ComplexMatrix) -> FlaggedCircuit:
    """Raw circuit ``PROJ·(I ⊗ U_I)``; the flag is the all-zero readout of PROJ's ancillas.

    Amplification reflects about the flagged subspace with the REF underlying PROJ, so each
    Grover iteration is charged one REF and one REF†.
    """
    ancilla_dim = 2**projector.num_ancilla
    unitary = projector.unitary @ kron(np.eye(ancilla_dim), state_prep)
    return FlaggedCircuit(
        unitary=unitary,
        good_dim=projector.system_dim,
        cost=projector.cost + state_prep_cost(),
        reflection_cost=projector.info.get("reflector_cost", QueryCost()),
    )


@dataclass(frozen=True)
class FidelityChain:
    """``actual ≥ bound ≥ floor`` with ``bound = (c − γε/2)/(c + γε/2)`` and ``floor = 1 − ε``."""

    actual: float
    bound: float
    floor: float

    def holds(self, tol: float = 1e-12) -> bool:
        return self.actual >= self.bound - tol and self.bound >= self.floor - tol


def fidelity_bound_chain(
    instance: BenchmarkInstance, projector: BlockEncoding, gamma: float, eps: float
) -> FidelityChain:
    """Evaluate the fidelity chain of a projected initial state against the exact ground
    state; ``c = |⟨ψ_0|φ_0⟩| ≥ γ``."""
    projected = projector.block() @ instance.initial_state
    actual = instance.fidelity(projected / np.linalg.norm(projected))
    c = instance.overlap
    slack = gamma * eps / 2.0
    return FidelityChain(actual=actual, bound=(c - slack) / (c + slack), floor=1.0 - eps)


def rayleigh_bound(mu: float, delta: float, alpha: float, gamma: float, eps_prime: float) -> float:
    """Upper bound on the energy of the state flagged by ``PROJ(μ − 2δ, δ/α̃, ε')``.

    Eigencomponents below ``μ − δ`` contribute at most ``μ − δ``; those above pass with
    amplitude at most ``ε'/2`` against a flagged weight of at least ``γ²(1 − ε'/2)²``.
    """
    leak = (eps_prime / 2.0) ** 2 / (gamma**2 * (1.0 - eps_prime / 2.0) ** 2)
    return mu - delta + max(0.0, alpha - (mu - delta)) * leak


def _run(
    problem: PrepProblem,
    projector: BlockEncoding,
    rng: SeedLike,
    deterministic: bool,
    params: Dict[str, Any],
) -> PrepResult:
    circuit = flagged_projection(projector, problem.state_prep)
    amplitude = circuit.amplitude
    logger.info(f"Raw flagged amplitude {amplitude:.6g} (probability {amplitude**2:.6g})")
    result = amplitude_amplify(
        circuit,
        rng,
        known_amplitude=amplitude if deterministic else None,
        amplitude_floor=problem.gamma / 2.0,
    )
    fidelity = energy = None
    if problem.truth is not None:
        fidelity = problem.truth.fidelity(result.state)
        energy = expectation(problem.truth.H, result.state)
    return PrepResult(
        state=result.state,
        fidelity=fidelity,
        success_probability=amplitude**2,
        amplified_probability=result.success_probability,
        iterations=result.iterations,
        rounds=result.rounds,
        ledger=result.ledger,
        params=params,
        energy=energy,
    )


def prepare_with_bound(
    problem: PrepProblem, rng: SeedLike, deterministic: bool = True
) -> PrepResult:
    """Prepare the ground state given an energy bound ``μ`` inside the gap.

    Args:
        problem: Oracles with the promises ``|⟨φ_0|ψ_0⟩| ≥ γ`` and
            ``λ_0 ≤ μ − Δ/2 < μ + Δ/2 ≤ λ_1``
        rng: Explicit seed or generator
        deterministic: Use the exact flagged amplitude for the iteration count instead of
            the exponential-guess schedule

    Returns:
        The prepared state, certified against the exact ground space when available

    Raises:
        ContractViolation: If ``μ`` or ``Δ`` is missing
        AmplificationError: If the flag never reads success within the cap
    """
    if problem.mu is None or problem.delta_gap is None:
        raise ContractViolation("preparation with a bound needs both mu and Delta")
    alpha_shifted = problem.alpha + abs(problem.mu)
    delta = problem.delta_gap / (4.0 * alpha_shifted)
    ref_eps = problem.gamma * problem.eps
    logger.info(
        f"Preparing with bound mu={problem.mu:.6g}, Delta={problem.delta_gap:.4g}, "
        f"gamma={problem.gamma:.4g}, eps={problem.eps:.1e}"
    )
    projector = make_projector(problem.encoding, problem.mu, delta, ref_eps)
    params = {
        "mu": problem.mu,
        "Delta": problem.delta_gap,
        "gamma": problem.gamma,
        "eps": problem.eps,
        "delta": delta,
        "degree": projector.info.get("degree"),
        "alpha": problem.alpha,
    }
    result = _run(problem, projector, rng, deterministic, params)
    half = problem.eps / 2.0
    result.fidelity_bound = (1.0 - half) / (1.0 + half)
    if result.fidelity is not None:
        logger.info(f"Fidelity {result.fidelity:.8f} (guaranteed >= {1.0 - problem.eps:.6f})")
    return result


def prepare_low_energy(
    problem: PrepProblem,
    mu: float,
    delta_resolution: float,
    rng: SeedLike,
    deterministic: bool = True,
    eps_prime: Optional[float] = None,
) -> PrepResult:
    """Prepare a state of energy at most ``μ`` without any gap assumption.

    The initial state must put weight at least ``γ²`` on eigenvalues ``≤ μ − 3δ``.
    Degenerate ground levels are allowed.
    """
    if delta_resolution <= 0.0:
        raise ContractViolation(f"delta_resolution must be positive, got {delta_resolution}")
    threshold = mu - 2.0 * delta_resolution
    alpha_shifted = problem.alpha + abs(threshold)
    delta = delta_resolution / alpha_shifted
    if eps_prime is None:
        eps_prime = problem.gamma**2 * delta_resolution / (8.0 * problem.alpha)
    if not 0.0 < delta < 1.0:
        raise ContractViolation(
            f"resolution {delta_resolution} gives a window {delta} outside (0, 1)"
        )
    logger.info(
        f"Low-energy preparation below mu={mu:.6g} with resolution {delta_resolution:.4g}, "
        f"eps'={eps_prime:.3e}"
    )
    projector = make_projector(problem.encoding, threshold, delta, eps_prime)
    params = {
        "mu": mu,
        "delta_resolution": delta_resolution,
        "gamma": problem.gamma,
        "eps_prime": eps_prime,
        "degree": projector.info.get("degree"),
        "alpha": problem.alpha,
        "energy_bound": rayleigh_bound(mu, delta_resolution, problem.alpha, problem.gamma,
                                       eps_prime),
    }
    result = _run(problem, projector, rng, deterministic, params)
    if result.energy is not None and result.energy > mu:
        logger.warning(f"Output energy {result.energy:.6g} exceeds mu={mu:.6g}")
    return result
