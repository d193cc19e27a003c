"""Hermitian eigendecomposition.

Two backends share one contract: LAPACK (``numpy.linalg.eigh``) for production use and a
cyclic complex Jacobi solver used to cross-check it on small matrices.
"""

import logging
from typing import Any, Optional, Tuple

import numpy as np
import numpy.typing as npt

from cli.config import settings
from modules.exceptions import ContractViolation, ConvergenceError
from modules.linalg.dense import ComplexMatrix, _as_square

logger = logging.getLogger(__name__)


def _check_hermitian(A: ComplexMatrix, tol: float) -> None:
    defect = float(np.linalg.norm(A - A.conj().T, 2))
    if defect > tol:
        raise ContractViolation(f"matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")


def jacobi_eigh(
    A: Any, tol: float = 1e-14, max_sweeps: int = 60
) -> Tuple[npt.NDArray[np.float64], ComplexMatrix]:
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Each rotation first removes the phase of ``A[p, q]`` with a diagonal unitary and then
    applies the real symmetric Jacobi rotation that zeroes it.

    Args:
        A: Hermitian matrix
        tol: Stop when the off-diagonal Frobenius norm falls below ``tol * ‖A‖_F``
        max_sweeps: Sweep cap

    Returns:
        Unsorted eigenvalues and the matrix of eigenvectors (columns)
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(A), 1e-300)

    for sweep in range(max_sweeps):
        off = np.sqrt(max(np.linalg.norm(A) ** 2 - np.sum(np.abs(np.diag(A)) ** 2), 0.0))
        if off <= tol * scale:
            logger.debug(f"Jacobi converged after {sweep} sweeps")
            return np.real(np.diag(A)).copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                magnitude = abs(apq)
                if magnitude <= 1e-300:
                    continue
                phase = apq / magnitude
                theta = (A[q, q].real - A[p, p].real) / (2.0 * magnitude)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                cols = [p, q]
                A[:, cols] = A[:, cols] @ J
                A[cols, :] = J.conj().T @ A[cols, :]
                A[p, q] = A[q, p] = 0.0
                V[:, cols] = V[:, cols] @ J

    off = np.sqrt(max(np.linalg.norm(A) ** 2 - np.sum(np.abs(np.diag(A)) ** 2), 0.0))
    raise ConvergenceError("Jacobi eigensolver did not converge", off / scale, max_sweeps)


def eig_hermitian(
    A: Any, tol: Optional[float] = None, method: str = "lapack"
) -> Tuple[npt.NDArray[np.float64], ComplexMatrix]:
    """Eigenvalues in ascending order and orthonormal eigenvectors of a Hermitian matrix.

    The default is LAPACK through ``numpy.linalg.eigh``. The cyclic Jacobi solver is a
    cross-check and runs only when ``method="jacobi"`` is passed.

    Args:
        A: Hermitian matrix
        tol: Hermiticity tolerance, defaults to the structural tolerance
        method: ``"lapack"`` (default) or ``"jacobi"``

    Returns:
        Tuple of the ascending eigenvalues and eigenvector columns

    Raises:
        ContractViolation: If ``A`` is not Hermitian within ``tol``
    """
    tol = settings.STRUCTURAL_TOL if tol is None else tol
    A = _as_square(A, "operator")
    _check_hermitian(A, tol)
    A = 0.5 * (A + A.conj().T)

    if method == "lapack":
        eigenvalues, eigenvectors = np.linalg.eigh(A)
        return eigenvalues, eigenvectors
    if method == "jacobi":
        eigenvalues, eigenvectors = jacobi_eigh(A)
        order = np.argsort(eigenvalues, kind="stable")
        return eigenvalues[order], eigenvectors[:, order]
    raise ContractViolation(f"unknown eigensolver method '{method}'")


def reassemble(values: npt.NDArray[np.float64], vectors: ComplexMatrix) -> ComplexMatrix:
    """Reassemble ``V diag(values) V†`` from an eigendecomposition."""
    return (vectors * values[np.newaxis, :]) @ vectors.conj().T
