"""Dense linear-algebra kernels shared by the solver and the diagnostics.

Everything here wraps LAPACK via numpy/scipy; the only additions are the
explicit singularity signal used by the Newton step and consistent tolerance
conventions for rank / nullspace decisions.
"""

import warnings

import numpy as np
import scipy.linalg


class SingularSignal(Exception):
    """Raised when a linear system is numerically singular.

    Carries enough context (pivot magnitude, threshold) to explain why the
    Newton direction was rejected.
    """


def solve_linear(A, b, pivot_tol=1e-12):
    """Solve ``A d = b`` by LU with partial pivoting.

    Parameters
    ----------
    A : (k, k) array_like
    b : (k,) array_like
    pivot_tol : float
        The system is declared singular when some ``|U_ii|`` from the LU
        factorization falls below ``pivot_tol * max|A|``.

    Returns
    -------
    d : (k,) ndarray

    Raises
    ------
    SingularSignal
        If the factorization exposes a negligible pivot (or A is empty-rank
        zero matrix), instead of returning garbage from a near-singular solve.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: A is {A.shape}, b is {b.shape}")
    if A.shape[0] == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
        raise SingularSignal("non-finite entries in linear system")
    with warnings.catch_warnings():
        # An exactly singular factorization is an expected signal here (it
        # becomes SingularSignal below), not a user-facing warning.
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    scale = np.abs(A).max()
    threshold = pivot_tol * max(scale, 1e-300)
    diag = np.abs(np.diag(lu))
    if scale == 0.0 or diag.min() < threshold:
        raise SingularSignal(
            f"negligible pivot {diag.min():.3e} < {threshold:.3e}"
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def numerical_rank(A, tol=1e-10):
    """Rank of ``A`` = number of singular values above ``tol * sigma_max``."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0
    sigma = scipy.linalg.svdvals(A)
    if sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > tol * sigma[0]))


def min_eig_sym(A):
    """Smallest eigenvalue of a (nearly) symmetric matrix.

    The input is symmetrized first so that tiny asymmetries from floating
    point assembly cannot push the computation into complex arithmetic.
    """
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 0:
        raise ValueError("min_eig_sym of an empty matrix is undefined")
    sym = 0.5 * (A + A.T)
    return float(np.linalg.eigvalsh(sym)[0])


def nullspace_basis(A, tol=1e-10):
    """Orthonormal basis (columns) of the nullspace of ``A``.

    Singular directions with ``sigma <= tol * max(sigma_max, 1)`` count as
    null. A constraint matrix with zero rows has the full space as nullspace.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    ncols = A.shape[1]
    if A.shape[0] == 0 or ncols == 0:
        return np.eye(ncols)
    _, sigma, vt = scipy.linalg.svd(A)
    threshold = tol * max(sigma[0] if sigma.size else 0.0, 1.0)
    nnz = int(np.count_nonzero(sigma > threshold))
    return vt[nnz:].T.copy()
