"""Data models for the qgsp toolkit.

This module defines the Pydantic models used to validate run configurations, input files
and the JSON artifacts written by the command-line front end.
"""

from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class Family(str, Enum):
    """Benchmark Hamiltonian families."""
    SINGLE_QUBIT = "single_qubit"
    GROVER = "grover"
    COUNTING = "counting"
    RANDOM_GAPPED = "random_gapped"
    RANDOM_GAPLESS = "random_gapless"
    ISING = "ising"
    MARKED = "marked"
    FILE = "file"


class AeMode(str, Enum):
    """Binary amplitude estimation back ends."""
    ORACLE_THRESHOLD = "oracle_threshold"
    STATISTICAL_MODEL = "statistical_model"
    CIRCUIT_QPE = "circuit_qpe"


class OutputFormat(str, Enum):
    """Artifact formats."""
    JSON = "json"
    CSV = "csv"


class RunStatus(str, Enum):
    """Outcome of a CLI run, mirrored by the exit code."""
    OK = "ok"
    CONTRACT_VIOLATION = "contract_violation"
    NUMERICAL_FAILURE = "numerical_failure"


class MatrixPayload(BaseModel):
    """Dense complex matrix in row-major order."""
    rows: int = Field(gt=0)
    cols: int = Field(gt=0)
    re: List[float]
    im: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_sizes(self) -> "MatrixPayload":
        size = self.rows * self.cols
        if len(self.re) != size or (self.im is not None and len(self.im) != size):
            raise ValueError(f"expected {size} entries for a {self.rows}x{self.cols} matrix")
        return self


class VectorPayload(BaseModel):
    """Complex state vector."""
    re: List[float]
    im: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_sizes(self) -> "VectorPayload":
        if self.im is not None and len(self.im) != len(self.re):
            raise ValueError("real and imaginary parts differ in length")
        return self


class PauliTerm(BaseModel):
    """One weighted Pauli string, qubit 0 first."""
    coeff: float
    paulis: str = Field(pattern=r"^[IXYZ]+$")


class PauliHamiltonianPayload(BaseModel):
    """Hamiltonian given as a list of Pauli strings."""
    terms: List[PauliTerm] = Field(min_length=1)
    initial_state: Optional[VectorPayload] = None

    @field_validator("terms")
    @classmethod
    def same_width(cls, terms: List[PauliTerm]) -> List[PauliTerm]:
        widths = {len(term.paulis) for term in terms}
        if len(widths) != 1:
            raise ValueError(f"Pauli strings have mixed lengths {sorted(widths)}")
        return terms


class DenseHamiltonianPayload(BaseModel):
    """Hamiltonian given as a dense matrix, with optional metadata."""
    matrix: MatrixPayload
    alpha: Optional[float] = Field(default=None, gt=0)
    initial_state: Optional[VectorPayload] = None
    family: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)


class GroundTruthPayload(BaseModel):
    """Ground-truth sidecar written next to a saved instance."""
    family: str
    params: Dict[str, Any]
    alpha: float
    eigenvalues: List[float]
    ground_energy: float
    gap: float
    overlap: float
    degenerate: bool


class PolynomialPayload(BaseModel):
    """Odd sign-approximant in the odd Chebyshev basis."""
    degree: int = Field(gt=0)
    delta: float = Field(gt=0, lt=1)
    eps: float = Field(gt=0, lt=1)
    eps_achieved: Optional[float] = None
    cheb_odd: List[float]


class PhasePayload(BaseModel):
    """QSP phase factors in the reflection convention."""
    phases: List[float]
    degree: int
    residual: float
    convention: str = "reflection"


class LedgerCounts(BaseModel):
    """Query counts of one oracle."""
    fwd: int = 0
    inv: int = 0
    ctrl: int = 0


class LedgerPayload(BaseModel):
    """Exported query ledger."""
    U_H: LedgerCounts
    U_I: LedgerCounts
    other: LedgerCounts = Field(default_factory=LedgerCounts)
    gates_estimate: int = 0


class PrepResultPayload(BaseModel):
    """Result of a preparation run."""
    fidelity: float = Field(ge=0, le=1 + 1e-9)
    success_prob: float
    fidelity_bound: Optional[float] = None
    energy: Optional[float] = None
    ledger: LedgerPayload
    params: Dict[str, Any]


class TraceRow(BaseModel):
    """One iteration of the binary search: probed index and the two bits."""
    k: int
    b_k: int
    b_k1: int
    ambiguous: bool = False


class EnergyResultPayload(BaseModel):
    """Result of a ground-energy search."""
    bracket: List[float] = Field(min_length=2, max_length=2)
    indices: List[int] = Field(min_length=2, max_length=2)
    h: float
    vartheta: float
    iterations: int
    ledger: LedgerPayload
    trace: List[TraceRow]
    params: Dict[str, Any] = Field(default_factory=dict)


class SweepRow(BaseModel):
    """One point of the reflector error sweep."""
    a: float
    operator_norm_error: float


class ErrorPayload(BaseModel):
    """Machine-readable error written to stderr."""
    error: str
    message: str


class RunConfig(BaseModel):
    """Parameters of one CLI run; flags override values from a config file."""
    command: str
    family: Family = Family.SINGLE_QUBIT
    n: int = Field(default=1, ge=1, le=12)
    a: float = Field(default=0.3, ge=0, le=1)
    tau: float = Field(default=0.5, ge=0, le=1)
    marked: Optional[List[int]] = None
    marked_count: int = Field(default=1, ge=1)
    delta_exp: float = Field(default=0.1, gt=0, lt=1 / 6)
    coupling: float = 1.0
    transverse_field: float = 1.0
    hamiltonian: Optional[str] = None

    gamma: float = Field(default=0.5, gt=0, le=1)
    delta_gap: Optional[float] = Field(default=None, gt=0)
    mu: Optional[float] = None
    h: Optional[float] = Field(default=None, gt=0)
    shift: float = Field(default=0.0, ge=0)
    eps: float = Field(default=1e-3, gt=0, lt=1)
    vartheta: float = Field(default=0.1, gt=0, lt=1)
    delta: float = Field(default=0.2, gt=0, lt=1)
    eps_prime: Optional[float] = Field(default=None, gt=0, lt=1)
    resolution: float = Field(default=0.02, gt=0)
    degree: Optional[int] = Field(default=None, gt=0)
    points: int = Field(default=201, ge=2)
    ae_mode: AeMode = AeMode.STATISTICAL_MODEL
    deterministic: bool = True

    seed: int = Field(default=0, ge=0)
    out: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON

    @field_validator("degree")
    @classmethod
    def odd_degree(cls, degree: Optional[int]) -> Optional[int]:
        if degree is not None and degree % 2 == 0:
            raise ValueError(f"degree must be odd, got {degree}")
        return degree

    @model_validator(mode="after")
    def family_requirements(self) -> "RunConfig":
        if self.family == Family.FILE and not self.hamiltonian:
            raise ValueError("family 'file' needs --hamiltonian")
        if self.family == Family.COUNTING and self.marked_count >= 2**self.n:
            raise ValueError("the marked set must be a proper subset")
        return self
