"""Exception types raised by the qgsp modules.

Precondition failures derive from :class:`ContractViolation` (a ``ValueError``) and map to
CLI exit code 2; numerical failures derive from :class:`NumericalFailure` (a
``RuntimeError``) and map to exit code 3.
"""

from typing import Optional


class QgspError(Exception):
    """Base class for all toolkit errors."""


class ContractViolation(QgspError, ValueError):
    """An operation was called outside its preconditions."""


class DimensionMismatch(ContractViolation):
    """Operands have incompatible shapes."""


class QubitBudgetExceeded(ContractViolation):
    """A register would exceed the configured dense-simulation cap."""

    def __init__(self, requested: int, limit: int):
        super().__init__(
            f"register of {requested} qubits exceeds the cap of {limit} "
            f"(raise QGSP_MAX_QUBITS to override)"
        )
        self.requested = requested
        self.limit = limit


class MalformedInput(ContractViolation):
    """A file or payload could not be parsed into the expected structure."""


class NumericalFailure(QgspError, RuntimeError):
    """A numerical procedure failed to reach its target."""


class ConvergenceError(NumericalFailure):
    """An iterative method stopped before meeting its tolerance."""

    def __init__(self, message: str, residual: float, iterations: Optional[int] = None):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class PhaseSolverError(ConvergenceError):
    """The phase-factor optimizer stalled above the requested residual."""


class AmplificationError(NumericalFailure):
    """Amplitude amplification made no progress within its attempt cap."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} after {attempts} attempts")
        self.attempts = attempts


class ZeroProbabilityBranch(NumericalFailure):
    """A measurement selected a branch whose probability is numerically zero."""
