"""Dense complex linear algebra kernel: solves and Hermitian eigensystems.

Thin, contract-enforcing wrappers around LAPACK (via numpy/scipy). Every
other module routes its dense solves and eigendecompositions through here
so that pivot checks and Hermiticity checks live in one place.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

PIVOT_RTOL = 1e-14
HERMITICITY_RTOL = 1e-10


class SingularMatrixError(ValueError):
    """Raised when a pivot falls below the relative singularity threshold."""


class NonHermitianError(ValueError):
    """Raised when hermitian_eig is handed a matrix that is not Hermitian."""


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class HermitianEigensystem:
    """Eigenvalues (descending) and orthonormal eigenvector columns."""

    dim: int
    eigenvalues: np.ndarray   # real, shape (dim,), sorted descending
    eigenvectors: np.ndarray  # complex, shape (dim, dim), columns orthonormal


def solve_linear(a, b):
    """Solve A X = B for X with partial-pivoted LU.

    B may be a vector or a matrix of right-hand-side columns; the
    factorization is computed once and shared across all columns.
    Raises SingularMatrixError when the smallest pivot magnitude drops
    below PIVOT_RTOL * max|A|.
    """
    a = _as_matrix(a, "A")
    n, m = a.shape
    if n != m:
        raise ValueError(f"A must be square, got shape {a.shape}")
    b_arr = np.asarray(b, dtype=complex)
    squeeze = b_arr.ndim == 1
    if squeeze:
        b_arr = b_arr[:, None]
    b_arr = _as_matrix(b_arr, "B")
    if b_arr.shape[0] != n:
        raise ValueError(f"B has {b_arr.shape[0]} rows, expected {n}")

    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    scale = np.abs(a).max()
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or pivots.min() < PIVOT_RTOL * scale:
        raise SingularMatrixError(
            f"matrix singular to working precision (min pivot "
            f"{pivots.min() if scale else 0.0:.3e}, scale {scale:.3e})"
        )
    x = scipy.linalg.lu_solve((lu, piv), b_arr, check_finite=False)
    return x[:, 0] if squeeze else x


def hermitian_eig(a):
    """Full eigensystem of a Hermitian matrix, eigenvalues descending.

    The caller is expected to hand in a matrix that is Hermitian up to
    HERMITICITY_RTOL * max|A|; the symmetrized (A + A*)/2 is decomposed.
    """
    a = _as_matrix(a, "A")
    n, m = a.shape
    if n != m:
        raise ValueError(f"A must be square, got shape {a.shape}")
    scale = max(np.abs(a).max(), 1.0)
    defect = np.abs(a - a.conj().T).max()
    if defect > HERMITICITY_RTOL * scale:
        raise NonHermitianError(
            f"matrix is not Hermitian: max|A - A*| = {defect:.3e}, "
            f"allowed {HERMITICITY_RTOL * scale:.3e}"
        )
    sym = 0.5 * (a + a.conj().T)
    vals, vecs = np.linalg.eigh(sym)
    # eigh returns ascending order
    return HermitianEigensystem(dim=n, eigenvalues=vals[::-1].copy(),
                                eigenvectors=vecs[:, ::-1].copy())


def abs_operator(a):
    """Spectral absolute value V |L| V* of a Hermitian matrix.

    The result is Hermitian positive semidefinite by construction; it is
    re-symmetrized to remove rounding asymmetry.
    """
    eig = hermitian_eig(a)
    v = eig.eigenvectors
    result = (v * np.abs(eig.eigenvalues)) @ v.conj().T
    return 0.5 * (result + result.conj().T)
