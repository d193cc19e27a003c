"""Reflector and projector circuits built from sign polynomials.

``REF(μ, δ, ε)`` realizes ``−S((H − μI)/α̃; δ, ε/2)`` by QSP on the shifted encoding of
``H − μI`` and is a (1, m+2, ε)-block-encoding of ``R_{<μ}`` whenever every eigenvalue of
``H`` sits at least ``δ·α̃`` away from ``μ``. ``PROJ(μ, δ, ε)`` adds one Hadamard-conjugated
control ancilla on top of REF and block-encodes ``P_{<μ} = (I + R_{<μ})/2`` to ``ε/2``.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple

import numpy as np

from modules.blockenc.encoding import BlockEncoding, QueryLedger, shift_encoding
from modules.exceptions import ContractViolation, DimensionMismatch, ZeroProbabilityBranch
from modules.linalg.dense import (
    ComplexMatrix,
    SeedLike,
    StateVector,
    as_generator,
    check_register,
    marginal_probabilities,
    measure,
)
from modules.linalg.eigen import eig_hermitian, reassemble
from modules.polyapprox.remez import OddPolynomial, build_sign_poly
from modules.qsp.circuit import assemble_qsp_unitary
from modules.qsp.phases import PhaseFactorSequence, solve_phase_factors

logger = logging.getLogger(__name__)

RESAMPLE_GUARD = 3


class PostselectFlag(str, Enum):
    """Ancilla readout classes of a projector application."""
    SUCCESS0 = "success0"
    FLIP1 = "flip1"
    GARBAGE = "garbage"


@lru_cache(maxsize=128)
def sign_phase_factors(delta: float, eps: float) -> Tuple[OddPolynomial, PhaseFactorSequence]:
    """Sign polynomial and its phases with the error budget ``eps`` split evenly.

    Results are cached by ``(delta, eps)``; both values are immutable.
    """
    poly = build_sign_poly(delta, eps / 2.0)
    phases = solve_phase_factors(poly, eps / 2.0)
    return poly, phases


def spectral_reflector(H: Any, mu: float, tol: Optional[float] = None) -> ComplexMatrix:
    """Exact ``R_{<μ}`` from the eigendecomposition; eigenvalues equal to μ map to 0."""
    eigenvalues, eigenvectors = eig_hermitian(H, tol=tol)
    return reassemble(np.sign(mu - eigenvalues), eigenvectors)


def spectral_projector(H: Any, mu: float, tol: Optional[float] = None) -> ComplexMatrix:
    """Exact ``P_{<μ}``."""
    eigenvalues, eigenvectors = eig_hermitian(H, tol=tol)
    return reassemble((eigenvalues < mu).astype(float), eigenvectors)


def make_reflector(
    be_H: BlockEncoding,
    mu: float,
    delta: float,
    eps: float,
    ledger: Optional[QueryLedger] = None,
) -> BlockEncoding:
    """Build ``REF(μ, δ, ε)``.

    The caller guarantees the gap condition and passes ``delta = Δ/(4α̃)`` with
    ``α̃ = α + |μ|``; it is not checked here.

    Args:
        be_H: Exact block-encoding of ``H``
        mu: Reflection threshold
        delta: Sign-polynomial window for the shifted and rescaled operator
        eps: Target accuracy of the reflector block
        ledger: When given, the queries of one application are recorded

    Returns:
        A (1, m+2, eps)-block-encoding of ``R_{<μ}``

    Raises:
        ContractViolation: On out-of-range ``delta`` or ``eps``
        PhaseSolverError: If the phase factors do not converge
    """
    if not 0.0 < eps < 1.0:
        raise ContractViolation(f"eps must lie in (0, 1), got {eps}")
    shifted = shift_encoding(be_H, mu)
    check_register(shifted.num_qubits + 1)
    poly, phases = sign_phase_factors(float(delta), float(eps))
    circuit = assemble_qsp_unitary(shifted, phases.negated(), ledger=ledger)
    logger.info(
        f"REF(mu={mu:.6g}, delta={delta:.4g}, eps={eps:.1e}): degree {poly.degree}, "
        f"{circuit.num_qubits} qubits"
    )
    return circuit.as_block_encoding(
        epsilon=eps, kind="REF", mu=float(mu), delta=float(delta), alpha_shifted=shifted.alpha
    )


def make_projector(
    be_H: BlockEncoding,
    mu: float,
    delta: float,
    eps: float,
    ledger: Optional[QueryLedger] = None,
) -> BlockEncoding:
    """Build ``PROJ(μ, δ, ε) = (H ⊗ I)(|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ REF)(H ⊗ I)``.

    The leading block is ``(I + REF block)/2``, a (1, m+3, ε/2)-block-encoding of ``P_{<μ}``.
    """
    ref = make_reflector(be_H, mu, delta, eps)
    dim = ref.unitary.shape[0]
    check_register(ref.num_qubits + 1)
    identity = np.eye(dim, dtype=complex)
    plus = 0.5 * (identity + ref.unitary)
    minus = 0.5 * (identity - ref.unitary)
    unitary = np.block([[plus, minus], [minus, plus]])
    info = dict(ref.info)
    info["kind"] = "PROJ"
    info["reflector_cost"] = ref.cost
    projector = BlockEncoding(
        unitary=unitary,
        alpha=1.0,
        num_ancilla=ref.num_ancilla + 1,
        epsilon=eps / 2.0,
        ledger_tag=ref.ledger_tag,
        cost=ref.cost.controlled(),
        info=info,
    )
    if ledger is not None:
        ledger.record_cost(projector.cost)
    return projector


@dataclass
class PostselectResult:
    """Readout of one projector application."""

    flag: PostselectFlag
    state: StateVector
    probabilities: Dict[str, float]
    ledger: QueryLedger = field(default_factory=QueryLedger)


def _outcome_probabilities(marginal: np.ndarray) -> Dict[str, float]:
    flip_index = marginal.shape[0] // 2
    success = float(marginal[0])
    flip = float(marginal[flip_index]) if flip_index > 0 else 0.0
    return {
        PostselectFlag.SUCCESS0.value: success,
        PostselectFlag.FLIP1.value: flip,
        PostselectFlag.GARBAGE.value: max(0.0, float(marginal.sum()) - success - flip),
    }


def apply_and_postselect(be: BlockEncoding, state: Any, rng: SeedLike) -> PostselectResult:
    """Apply an encoding to ``|0^m⟩ ⊗ |φ⟩`` and measure its ancillas.

    All-zero readout gives ``success0`` (state ∝ block·φ), ``1 0…0`` gives ``flip1`` (for a
    projector the state is close to ``P_{>μ}φ``), anything else is ``garbage``.

    Returns:
        The flag, the normalized system state of the observed branch, the exact outcome
        probabilities, and the queries spent
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (be.system_dim,):
        raise DimensionMismatch(f"state of length {state.shape} on a {be.system_dim}-dim system")
    rng = as_generator(rng)
    full = np.zeros(be.unitary.shape[0], dtype=complex)
    full[: be.system_dim] = state
    out = be.unitary @ full

    ancillas = list(range(be.num_ancilla))
    probabilities = _outcome_probabilities(marginal_probabilities(out, ancillas))
    ledger = QueryLedger()
    ledger.record_cost(be.cost)

    for attempt in range(RESAMPLE_GUARD):
        try:
            bits, post = measure(out, ancillas, rng)
            break
        except ZeroProbabilityBranch:
            logger.warning(f"Zero-probability branch drawn, resampling (attempt {attempt + 1})")
    else:
        raise ZeroProbabilityBranch("ancilla measurement kept selecting empty branches")

    outcome = int("".join(map(str, bits)), 2) if bits else 0
    system = post.reshape(2**be.num_ancilla, be.system_dim)[outcome]
    if not any(bits):
        flag = PostselectFlag.SUCCESS0
    elif bits[0] == 1 and not any(bits[1:]):
        flag = PostselectFlag.FLIP1
    else:
        flag = PostselectFlag.GARBAGE
    logger.debug(f"Postselection outcome {bits} -> {flag.value}")
    return PostselectResult(flag=flag, state=system, probabilities=probabilities, ledger=ledger)

