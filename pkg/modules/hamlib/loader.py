"""Hamiltonian files: dense-matrix JSON and Pauli-string lists.

Dense files hold ``{"matrix": {"rows", "cols", "re", "im"}, "alpha"?, "initial_state"?}``;
Pauli files hold ``{"terms": [{"coeff": c, "paulis": "XIZ"}, ...]}``. Saved instances get a
``<stem>.truth.json`` sidecar with the exact spectrum for regression pinning.
"""

import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np
from pydantic import ValidationError

from cli.models import (
    DenseHamiltonianPayload,
    Family,
    GroundTruthPayload,
    PauliHamiltonianPayload,
    RunConfig,
    VectorPayload,
)
from modules.exceptions import ContractViolation, MalformedInput
from modules.hamlib.benchmarks import (
    BenchmarkInstance,
    build_instance,
    make_counting,
    make_grover_family,
    make_marked_oracle,
    make_random_gapless,
    make_random_gapped,
    make_single_qubit,
    make_transverse_field_ising,
)
from modules.hamlib.pauli import pauli_sum
from modules.linalg.dense import (
    SeedLike,
    basis_state,
    is_hermitian,
    matrix_from_json,
    matrix_to_json,
)

logger = logging.getLogger(__name__)


def _vector(payload: Optional[VectorPayload], dim: int) -> np.ndarray:
    if payload is None:
        return basis_state(int(np.log2(dim)), 0)
    re = np.asarray(payload.re, dtype=float)
    im = np.asarray(payload.im if payload.im is not None else np.zeros_like(re), dtype=float)
    if re.shape[0] != dim:
        raise MalformedInput(f"initial state of length {re.shape[0]} for dimension {dim}")
    return re + 1j * im


def _instance_from_pauli(payload: PauliHamiltonianPayload, source: str) -> BenchmarkInstance:
    H, alpha = pauli_sum([(term.coeff, term.paulis) for term in payload.terms])
    state = _vector(payload.initial_state, H.shape[0])
    return build_instance("file", {"source": source, "format": "pauli"}, H, alpha, state)


def _instance_from_dense(payload: DenseHamiltonianPayload, source: str) -> BenchmarkInstance:
    H = matrix_from_json(payload.matrix.model_dump(exclude_none=True))
    if H.shape[0] != H.shape[1]:
        raise MalformedInput(f"Hamiltonian must be square, got {H.shape}")
    if not is_hermitian(H):
        raise ContractViolation(f"Hamiltonian in {source} is not Hermitian")
    alpha = payload.alpha
    if alpha is None:
        alpha = float(np.linalg.norm(H, 2))
    state = _vector(payload.initial_state, H.shape[0])
    params = dict(payload.params)
    params.update({"source": source, "format": "dense"})
    return build_instance(payload.family or "file", params, H, alpha, state)


def parse_hamiltonian(data: Dict[str, Any], source: str = "<memory>") -> BenchmarkInstance:
    """Build an instance from an already decoded JSON document."""
    try:
        if "terms" in data:
            return _instance_from_pauli(PauliHamiltonianPayload.model_validate(data), source)
        if "paulis" in data and isinstance(data["paulis"], dict):
            terms = [{"coeff": c, "paulis": p} for p, c in data["paulis"].items()]
            payload = PauliHamiltonianPayload.model_validate({**data, "terms": terms})
            return _instance_from_pauli(payload, source)
        if "matrix" not in data and "rows" in data:
            data = {"matrix": data}
        return _instance_from_dense(DenseHamiltonianPayload.model_validate(data), source)
    except ValidationError as e:
        raise MalformedInput(f"malformed Hamiltonian file {source}: {e}") from e


def load_hamiltonian(path: str) -> BenchmarkInstance:
    """Load a dense or Pauli-list Hamiltonian file.

    Raises:
        MalformedInput: If the file is unreadable or does not match either format
        ContractViolation: If the assembled matrix is not Hermitian
    """
    logger.info(f"Loading Hamiltonian from {path}")
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise MalformedInput(f"cannot read Hamiltonian file {path}: {e}") from e
    if not isinstance(data, dict):
        raise MalformedInput(f"Hamiltonian file {path} must hold a JSON object")
    return parse_hamiltonian(data, source=os.path.basename(path))


def truth_path(path: str) -> str:
    stem, _ = os.path.splitext(path)
    return f"{stem}.truth.json"


def save_instance(instance: BenchmarkInstance, path: str) -> str:
    """Write the dense Hamiltonian and its ground-truth sidecar; returns the sidecar path."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    document = DenseHamiltonianPayload.model_validate(
        {
            "matrix": matrix_to_json(instance.H),
            "alpha": instance.alpha,
            "initial_state": {
                "re": instance.initial_state.real.tolist(),
                "im": instance.initial_state.imag.tolist(),
            },
            "family": instance.family,
            "params": instance.params,
        }
    )
    with open(path, "w") as f:
        json.dump(document.model_dump(), f, indent=2)

    sidecar = truth_path(path)
    truth = GroundTruthPayload.model_validate(instance.truth())
    with open(sidecar, "w") as f:
        json.dump(truth.model_dump(), f, indent=2)
    logger.info(f"Saved {instance.family} instance to {path} with sidecar {sidecar}")
    return sidecar


def build_family(config: RunConfig, rng: SeedLike) -> BenchmarkInstance:
    """Instantiate the benchmark family selected by a run configuration."""
    family = Family(config.family)
    if family == Family.SINGLE_QUBIT:
        return make_single_qubit(config.a)
    if family == Family.GROVER:
        return make_grover_family(config.n, config.tau, config.marked[0] if config.marked else None)
    if family == Family.COUNTING:
        marked = config.marked or list(range(config.marked_count))
        return make_counting(config.n, marked)
    if family == Family.MARKED:
        return make_marked_oracle(config.n, config.marked[0] if config.marked else None)
    if family == Family.RANDOM_GAPPED:
        if config.delta_gap is None:
            raise ContractViolation("random_gapped needs --delta-gap for the planted gap")
        return make_random_gapped(config.n, config.gamma, config.delta_gap, rng)
    if family == Family.RANDOM_GAPLESS:
        return make_random_gapless(config.n, config.gamma, rng)
    if family == Family.ISING:
        return make_transverse_field_ising(config.n, config.coupling, config.transverse_field)
    if config.hamiltonian is None:
        raise ContractViolation("family 'file' needs --hamiltonian")
    return load_hamiltonian(config.hamiltonian)
