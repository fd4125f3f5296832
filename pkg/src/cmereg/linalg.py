"""Dense symmetric linear algebra primitives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import ConvergenceError, InputError, SingularMatrixError


@dataclass(frozen=True)
class SpdSolveResult:
    solution: np.ndarray
    residual_norm: float


def solve_spd(A, B) -> SpdSolveResult:
    """Solve A X = B for symmetric positive definite A via Cholesky.

    Raises SingularMatrixError naming the failing pivot when A is not
    positive definite.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("A must be square")
    if B.shape[0] != A.shape[0]:
        raise InputError("A and B have incompatible shapes")
    b2d = B if B.ndim == 2 else B[:, None]
    c, info = lapack.dpotrf(A, lower=1)
    if info > 0:
        raise SingularMatrixError(info - 1)
    if info < 0:
        raise InputError(f"illegal value in argument {-info} of factorization")
    X, info = lapack.dpotrs(c, b2d, lower=1)
    if info != 0:
        raise SingularMatrixError(abs(info) - 1, "triangular solve failed")
    residual = float(np.linalg.norm(A @ X - b2d))
    X = X if B.ndim == 2 else X[:, 0]
    return SpdSolveResult(solution=X, residual_norm=residual)


def sym_eig_max(A, tol: float = 1e-10, max_iter: int = 20000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Deterministic start vector (normalized all-ones); restarts once with a
    perturbed vector if the Rayleigh quotient stagnates at zero.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    v = np.ones(n) / np.sqrt(n)
    lam = 0.0
    restarted = False
    for _ in range(max_iter):
        w = A @ v
        norm = np.linalg.norm(w)
        if norm <= 1e-300:
            if restarted:
                return 0.0  # A annihilates both probes: numerically zero matrix
            v = np.ones(n) + 0.5 * np.arange(n)
            v /= np.linalg.norm(v)
            restarted = True
            continue
        v_new = w / norm
        lam_new = float(v_new @ (A @ v_new))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam, v = lam_new, v_new
    raise ConvergenceError(lam, f"power iteration did not converge in {max_iter} steps")


def soft_threshold(z, t):
    """Shrink toward zero: sign(z) * max(|z| - t, 0). Works elementwise on arrays."""
    if np.any(np.asarray(t) < 0):
        raise InputError("threshold must be nonnegative")
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
