"""Geometry of the manifold of symmetric positive definite matrices.

All operations use the affine-invariant Riemannian metric
``<V1, V2>_X = tr(V1 X^-1 V2 X^-1)``. Points on the manifold and tangent
vectors are plain ``(n, n)`` float ndarrays; tangent vectors are symmetric
matrices. Matrix functions are evaluated through symmetric
eigendecomposition, and every congruence is taken with the symmetric square
root ``X^{-1/2}`` so that eigensolvers only ever see symmetric matrices.

Eigenvalues at or below ``EIG_FLOOR`` raise :class:`~spdlvq.exceptions.DomainError`
instead of being clamped: the geometry kernel fails loudly and leaves any
projection-style repair to callers. Outputs of matrix functions are
re-symmetrized as ``(A + A.T) / 2`` to keep round-off from accumulating
across long optimization runs.

Everything here is a pure function of its inputs and safe to call
concurrently.
"""

from typing import NamedTuple

import numpy as np

from .exceptions import ConvergenceError, DomainError, NumericalError, ValidationError

# Eigenvalues at or below this floor are treated as a domain violation.
EIG_FLOOR = 1e-12
# Relative Frobenius tolerance used for reconstruction-style invariants.
RECON_TOL = 1e-8
# Default cap on tangent eigenvalues passed to the matrix exponential;
# exp(710) overflows float64.
EXP_CAP = 700.0


class EigenDecomposition(NamedTuple):
    """Eigendecomposition of a symmetric matrix.

    ``eigenvalues`` are in ascending order and ``eigenvectors`` holds the
    matching orthonormal eigenvectors as columns, so that
    ``eigenvectors @ diag(eigenvalues) @ eigenvectors.T`` reconstructs the
    input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_tol(A):
    """Absolute symmetry tolerance for a matrix, ``1e-9 * (1 + max|entry|)``."""
    scale = float(np.abs(A).max()) if A.size else 0.0
    return 1e-9 * (1.0 + scale)


def symmetrize(A):
    """Return the symmetric part ``(A + A.T) / 2`` (batched over leading axes)."""
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def _as_square(A, name):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be a square 2-D matrix, got shape {A.shape}")
    return A


def check_symmetric(A, name="matrix"):
    """Validate symmetry within :func:`sym_tol` and return the array.

    Raises
    ------
    ValidationError
        If ``A`` is not square or not symmetric within tolerance.
    """
    A = _as_square(A, name)
    skew = float(np.abs(A - A.T).max()) if A.size else 0.0
    if skew > sym_tol(A):
        raise ValidationError(
            f"{name} is not symmetric: max |A - A.T| = {skew:.3e} exceeds tolerance"
        )
    return A


def check_spd(X, name="matrix"):
    """Validate that ``X`` is symmetric positive definite and return it.

    Raises
    ------
    ValidationError
        If ``X`` is not square or not symmetric.
    DomainError
        If the smallest eigenvalue is at or below ``EIG_FLOOR``.
    """
    X = check_symmetric(X, name)
    smallest = float(np.linalg.eigvalsh(X)[0])
    if smallest <= EIG_FLOOR:
        raise DomainError(
            f"{name} is not positive definite: smallest eigenvalue {smallest:.3e}"
        )
    return X


def _check_same_dim(A, B, name_a, name_b):
    if A.shape != B.shape:
        raise ValidationError(
            f"{name_a} and {name_b} must have equal dimensions, "
            f"got {A.shape} and {B.shape}"
        )


def _eigh(S):
    """np.linalg.eigh with the solver failure mapped to NumericalError."""
    try:
        return np.linalg.eigh(S)
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"symmetric eigendecomposition failed: {err}") from err


def sym_eig(S):
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    S : ndarray, shape (n, n)
        Symmetric matrix.

    Returns
    -------
    EigenDecomposition
        Ascending eigenvalues and orthonormal eigenvectors (as columns).

    Raises
    ------
    ValidationError
        If ``S`` is not symmetric within tolerance.
    NumericalError
        If the eigensolver fails to converge.
    """
    S = check_symmetric(S, "input")
    eigenvalues, eigenvectors = _eigh(S)
    return EigenDecomposition(eigenvalues, eigenvectors)


def _spd_eigh(X, name):
    """Eigendecomposition of an SPD matrix with the spectrum floor enforced."""
    X = check_symmetric(X, name)
    lam, U = _eigh(X)
    if float(lam[0]) <= EIG_FLOOR:
        raise DomainError(
            f"{name} is not positive definite: smallest eigenvalue {float(lam[0]):.3e}"
        )
    return lam, U


def _apply_spectral(lam, U, fn):
    """Assemble ``U diag(fn(lam)) U.T`` symmetrized."""
    return symmetrize((U * fn(lam)) @ U.T)


def mat_exp(V, max_exponent=EXP_CAP):
    """Matrix exponential of a symmetric matrix.

    Parameters
    ----------
    V : ndarray, shape (n, n)
        Symmetric matrix.
    max_exponent : float, default EXP_CAP
        Largest admissible eigenvalue; beyond it ``exp`` would overflow.

    Returns
    -------
    ndarray, shape (n, n)
        SPD matrix whose eigenvalues are ``exp`` of the eigenvalues of ``V``.

    Raises
    ------
    NumericalError
        If an eigenvalue exceeds ``max_exponent``.
    """
    V = check_symmetric(V, "tangent vector")
    lam, U = _eigh(V)
    if float(lam[-1]) > max_exponent:
        raise NumericalError(
            f"matrix exponential overflow: eigenvalue {float(lam[-1]):.3e} "
            f"exceeds cap {max_exponent:g}"
        )
    return _apply_spectral(lam, U, np.exp)


def mat_log(X):
    """Principal matrix logarithm of an SPD matrix.

    Returns the symmetric matrix whose eigenvalues are ``log`` of the
    eigenvalues of ``X``.
    """
    lam, U = _spd_eigh(X, "input")
    return _apply_spectral(lam, U, np.log)


def mat_sqrt(X):
    """Symmetric square root of an SPD matrix."""
    lam, U = _spd_eigh(X, "input")
    return _apply_spectral(lam, U, np.sqrt)


def mat_invsqrt(X):
    """Inverse of the symmetric square root of an SPD matrix."""
    lam, U = _spd_eigh(X, "input")
    return _apply_spectral(lam, U, lambda v: 1.0 / np.sqrt(v))


def _sqrt_invsqrt(X, name="base"):
    """Both X^{1/2} and X^{-1/2} from one eigendecomposition."""
    lam, U = _spd_eigh(X, name)
    root = np.sqrt(lam)
    return symmetrize((U * root) @ U.T), symmetrize((U / root) @ U.T)


def sqrt_invsqrt_batch(Xs):
    """X^{1/2} and X^{-1/2} for a stack of SPD matrices.

    Parameters
    ----------
    Xs : ndarray, shape (..., n, n)
        Stack of SPD matrices.

    Returns
    -------
    (ndarray, ndarray)
        Stacked square roots and inverse square roots.
    """
    Xs = np.asarray(Xs, dtype=float)
    lam, U = _eigh(Xs)
    if float(lam.min()) <= EIG_FLOOR:
        raise DomainError(
            f"batch contains a non-SPD matrix: smallest eigenvalue {float(lam.min()):.3e}"
        )
    root = np.sqrt(lam)[..., None, :]
    Ut = np.swapaxes(U, -1, -2)
    return symmetrize((U * root) @ Ut), symmetrize((U / root) @ Ut)


def inner(base, V1, V2):
    """Affine-invariant inner product ``tr(V1 base^-1 V2 base^-1)``.

    Parameters
    ----------
    base : ndarray, shape (n, n)
        SPD base point.
    V1, V2 : ndarray, shape (n, n)
        Tangent vectors at ``base``.

    Returns
    -------
    float
    """
    V1 = np.asarray(V1, dtype=float)
    V2 = np.asarray(V2, dtype=float)
    base = _as_square(base, "base")
    _check_same_dim(base, V1, "base", "V1")
    _check_same_dim(base, V2, "base", "V2")
    _, isq = _sqrt_invsqrt(base)
    P1 = isq @ V1 @ isq
    P2 = isq @ V2 @ isq
    return float(np.sum(P1 * P2))


def exp_map(base, V):
    """Riemannian exponential map at ``base``.

    Computes ``base^{1/2} exp(base^{-1/2} V base^{-1/2}) base^{1/2}``,
    mapping the tangent vector ``V`` to a point on the manifold.
    """
    return geodesic(base, V, 1.0)


def geodesic(base, V, t):
    """Point at parameter ``t`` on the geodesic from ``base`` with velocity ``V``.

    Computes ``base^{1/2} exp(t base^{-1/2} V base^{-1/2}) base^{1/2}``;
    ``t = 0`` gives ``base`` and ``t = 1`` gives ``exp_map(base, V)``.
    """
    V = check_symmetric(V, "direction")
    base = _as_square(base, "base")
    _check_same_dim(base, V, "base", "direction")
    sq, isq = _sqrt_invsqrt(base)
    A = symmetrize(isq @ V @ isq)
    lam, U = _eigh(A)
    scaled = float(t) * lam
    if scaled.size and float(scaled.max()) > EXP_CAP:
        raise NumericalError(
            f"matrix exponential overflow along geodesic: exponent {float(scaled.max()):.3e}"
        )
    E = _apply_spectral(scaled, U, np.exp)
    return symmetrize(sq @ E @ sq)


def log_map(base, X):
    """Riemannian logarithm map at ``base``.

    Computes ``base^{1/2} log(base^{-1/2} X base^{-1/2}) base^{1/2}``, the
    tangent vector at ``base`` whose exponential map reaches ``X``.
    """
    base = _as_square(base, "base")
    X = _as_square(X, "target")
    _check_same_dim(base, X, "base", "target")
    sq, isq = _sqrt_invsqrt(base)
    A = symmetrize(isq @ X @ isq)
    lam, U = _eigh(A)
    if float(lam[0]) <= EIG_FLOOR:
        raise DomainError(
            f"target is not positive definite relative to base: "
            f"smallest congruence eigenvalue {float(lam[0]):.3e}"
        )
    L = _apply_spectral(lam, U, np.log)
    return symmetrize(sq @ L @ sq)


def geo_distance(X1, X2, squared=False):
    """Affine-invariant geodesic distance between two SPD matrices.

    Equals ``||log(X1^-1 X2)||_F = sqrt(sum_i log^2 lambda_i)`` where
    ``lambda_i`` are the eigenvalues of ``X1^{-1/2} X2 X1^{-1/2}`` (the same
    eigenvalues as ``X1^-1 X2``, but from a symmetric matrix).

    Parameters
    ----------
    X1, X2 : ndarray, shape (n, n)
        SPD matrices.
    squared : bool, default False
        Return the squared distance.

    Returns
    -------
    float
    """
    X1 = _as_square(X1, "X1")
    X2 = _as_square(X2, "X2")
    _check_same_dim(X1, X2, "X1", "X2")
    _, isq = _sqrt_invsqrt(X1, "X1")
    lam = np.linalg.eigvalsh(symmetrize(isq @ X2 @ isq))
    if float(lam[0]) <= EIG_FLOOR:
        raise DomainError(
            f"X2 is not positive definite relative to X1: "
            f"smallest congruence eigenvalue {float(lam[0]):.3e}"
        )
    d2 = float(np.sum(np.log(lam) ** 2))
    return d2 if squared else float(np.sqrt(d2))


def geo_distances(Xs, Y, squared=False):
    """Geodesic distances from a stack of SPD matrices to one SPD matrix.

    Parameters
    ----------
    Xs : ndarray, shape (m, n, n)
        Stack of SPD matrices.
    Y : ndarray, shape (n, n)
        Reference SPD matrix.
    squared : bool, default False
        Return squared distances.

    Returns
    -------
    ndarray, shape (m,)
    """
    Xs = np.asarray(Xs, dtype=float)
    Y = _as_square(Y, "reference")
    if Xs.ndim != 3 or Xs.shape[-2:] != Y.shape:
        raise ValidationError(
            f"expected a stack of matrices with shape (m, {Y.shape[0]}, {Y.shape[0]}), "
            f"got {Xs.shape}"
        )
    _, isq = _sqrt_invsqrt(Y, "reference")
    lam = np.linalg.eigvalsh(symmetrize(isq @ Xs @ isq))
    if float(lam.min()) <= EIG_FLOOR:
        raise DomainError("stack contains a matrix that is not positive definite")
    d2 = np.sum(np.log(lam) ** 2, axis=-1)
    return d2 if squared else np.sqrt(d2)


def dist_sq_gradient(W, X):
    """Riemannian gradient of ``d(X, .)^2`` at the point ``W``.

    Equals ``-2 log_map(W, X)``; it vanishes exactly when ``W == X`` and
    points away from ``X``.
    """
    return -2.0 * log_map(W, X)


def karcher_mean(points, tol=1e-9, max_iter=200):
    """Karcher (Frechet) mean of a set of SPD matrices.

    Runs the fixed-point iteration ``M <- exp_map(M, mean_i log_map(M, X_i))``
    starting from the arithmetic average, until the Frobenius norm of the
    tangent-space average drops below ``tol``.

    Parameters
    ----------
    points : ndarray, shape (k, n, n)
        Non-empty stack of SPD matrices.
    tol : float, default 1e-9
        Convergence threshold on the tangent average.
    max_iter : int, default 200
        Iteration cap.

    Returns
    -------
    ndarray, shape (n, n)
        The mean, an SPD matrix.

    Raises
    ------
    ConvergenceError
        If the cap is reached; carries the last iterate and residual.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 2:
        points = points[None]
    if points.ndim != 3 or points.shape[0] == 0 or points.shape[1] != points.shape[2]:
        raise ValidationError(
            f"points must be a non-empty (k, n, n) stack, got shape {points.shape}"
        )
    lam = np.linalg.eigvalsh(points)
    if float(lam.min()) <= EIG_FLOOR:
        raise DomainError("points contain a matrix that is not positive definite")

    M = symmetrize(points.mean(axis=0))
    for iteration in range(max_iter + 1):
        sq, isq = _sqrt_invsqrt(M, "mean iterate")
        A = symmetrize(isq @ points @ isq)
        lam, U = _eigh(A)
        if float(lam.min()) <= EIG_FLOOR:
            raise DomainError("points contain a matrix that is not positive definite")
        logs = (U * np.log(lam)[..., None, :]) @ np.swapaxes(U, -1, -2)
        Lbar = symmetrize(logs.mean(axis=0))
        residual = float(np.linalg.norm(sq @ Lbar @ sq))
        if residual < tol:
            return M
        if iteration == max_iter:
            raise ConvergenceError(
                f"Karcher mean did not converge in {max_iter} iterations "
                f"(residual {residual:.3e}, tol {tol:g})",
                last_iterate=M,
                residual=residual,
                iterations=max_iter,
            )
        lam_b, U_b = _eigh(Lbar)
        E = _apply_spectral(lam_b, U_b, np.exp)
        M = symmetrize(sq @ E @ sq)
