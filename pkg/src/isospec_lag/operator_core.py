"""Dense complex linear algebra and operator primitives.

Everything in this module is a pure function over small dense numpy
arrays.  Matrices are plain ``numpy.ndarray`` objects of complex dtype;
validation helpers raise ``ValueError`` on malformed input instead of
silently coercing.  Hermiticity and positivity are always judged in the
Frobenius norm against an explicit tolerance so that long integrations
with floating-point drift remain checkable.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

#: Default Frobenius-norm tolerance for hermiticity / positivity checks.
HERMITIAN_TOL = 1e-10


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and return ``m`` as a square complex matrix.

    Parameters
    ----------
    m : array_like
        Square matrix data.
    name : str
        Label used in error messages.

    Returns
    -------
    numpy.ndarray
        Complex128 copy of ``m``.

    Raises
    ------
    ValueError
        If ``m`` is not square 2-D or contains non-finite entries.
    """
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def dagger(m) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(m, dtype=complex).conj().T


def commutator(a, b) -> np.ndarray:
    """Return ``ab - ba``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    """Return ``ab + ba``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_same_dim(a, b)
    return a @ b + b @ a


def frobenius_norm(m) -> float:
    """Frobenius norm of a matrix."""
    return float(np.linalg.norm(np.asarray(m)))


def hermitian_defect(m) -> float:
    """Frobenius distance ``||M - M^dag||_F`` from the Hermitian cone."""
    m = np.asarray(m, dtype=complex)
    return frobenius_norm(m - dagger(m))


def is_hermitian(m, tolerance: float = HERMITIAN_TOL) -> bool:
    """Whether ``||M - M^dag||_F <= tolerance``."""
    return hermitian_defect(m) <= tolerance


def require_hermitian(m, tolerance: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a complex matrix, raising if it is not Hermitian.

    Raises
    ------
    ValueError
        If the Hermitian defect exceeds ``tolerance``.
    """
    arr = as_complex_matrix(m, name)
    defect = hermitian_defect(arr)
    if defect > tolerance:
        raise ValueError(
            f"{name} is not Hermitian: defect {defect:.3e} > tolerance {tolerance:.3e}"
        )
    return arr


def matrix_exponential(m) -> np.ndarray:
    """Matrix exponential ``exp(m)``.

    Uses scaling-and-squaring with Pade approximation.  For an
    anti-Hermitian argument the result is unitary to within rounding.
    """
    arr = as_complex_matrix(m, "exponent")
    return scipy.linalg.expm(arr)


def hermitian_eigendecomposition(m, tolerance: float = HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    m : array_like
        Hermitian matrix.
    tolerance : float
        Hermiticity tolerance in Frobenius norm.

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        Ascending real eigenvalues and a unitary ``V`` with
        ``m = V diag(w) V^dag``.

    Raises
    ------
    ValueError
        If ``m`` fails the Hermiticity check.
    """
    arr = require_hermitian(m, tolerance)
    w, v = np.linalg.eigh(arr)
    return w, v


def hermitian_sqrt(m, tolerance: float = HERMITIAN_TOL) -> np.ndarray:
    """Hermitian PSD square root ``S`` with ``S @ S = m``.

    Eigenvalues in ``[-tolerance, 0)`` are clipped to zero; anything
    more negative raises.

    Raises
    ------
    ValueError
        If ``m`` is not Hermitian or has an eigenvalue below
        ``-tolerance``.
    """
    w, v = hermitian_eigendecomposition(m, tolerance)
    if np.min(w) < -tolerance:
        raise ValueError(
            f"matrix is not positive semidefinite: min eigenvalue {np.min(w):.3e}"
        )
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)) @ dagger(v)
    return (s + dagger(s)) / 2


def unitary_algebra_basis(n: int) -> list[np.ndarray]:
    """Anti-Hermitian basis of u(n), orthonormal for ``<X,Y> = Tr(X^dag Y)``.

    The n = 1 basis is ``[[i]]``.  For n = 2 the ordering is
    ``i*I/sqrt(2), i*sigma_x/sqrt(2), i*sigma_y/sqrt(2), i*sigma_z/sqrt(2)``.
    Higher n continues the same pattern: the scaled identity, then the
    symmetric and antisymmetric off-diagonal pairs in row-major order,
    then the traceless diagonal matrices.

    Returns
    -------
    list of numpy.ndarray
        ``n**2`` matrices ``tau_j`` with ``tau_j^dag = -tau_j``.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    basis: list[np.ndarray] = []
    basis.append(1j * np.eye(n, dtype=complex) / np.sqrt(n))
    for p in range(n):
        for q in range(p + 1, n):
            sym = np.zeros((n, n), dtype=complex)
            sym[p, q] = sym[q, p] = 1.0 / np.sqrt(2)
            basis.append(1j * sym)
            asym = np.zeros((n, n), dtype=complex)
            asym[p, q] = -1j / np.sqrt(2)
            asym[q, p] = 1j / np.sqrt(2)
            basis.append(1j * asym)
    for k in range(1, n):
        diag = np.zeros(n)
        diag[:k] = 1.0
        diag[k] = -float(k)
        diag /= np.linalg.norm(diag)
        basis.append(1j * np.diag(diag).astype(complex))
    return basis
