"""
Small dense complex-matrix kernels.

Matrices are plain numpy arrays.  The eigen-solver here is a cyclic Jacobi
method, meant for the tiny Gram matrices (q <= 8) fed to the exact engine,
where small eigenvalues must come out with good relative accuracy.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, NotPositiveDefinite

_LN2 = math.log(2.0)


def _as_matrix(M) -> np.ndarray:
    A = np.asarray(M)
    if A.ndim != 2 or A.size == 0:
        raise ConfigError(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ConfigError("matrix has non-finite entries")
    return A


def hermitian(A: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(A, -1, -2))


def gram(H, Nt: int, Nr: int) -> np.ndarray:
    """Channel correlation matrix of size ``min(Nt, Nr)``.

    Returns ``H^H H`` when ``Nt < Nr`` and ``H H^H`` otherwise.  ``H`` may
    carry leading batch axes; its trailing shape must be ``(Nr, Nt)``.
    """
    H = np.asarray(H)
    if H.shape[-2:] != (Nr, Nt):
        raise ConfigError(f"H has shape {H.shape[-2:]}, expected ({Nr}, {Nt})")
    if Nt < Nr:
        W = hermitian(H) @ H
    else:
        W = H @ hermitian(H)
    # exact Hermitian symmetry
    return 0.5 * (W + hermitian(W))


def log2_det_hermitian(A) -> float:
    """log2 det of a Hermitian positive definite matrix via Cholesky."""
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ConfigError(f"matrix must be square, got {A.shape}")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    d = np.real(np.diagonal(L))
    if np.any(d <= 0):
        raise NotPositiveDefinite("non-positive Cholesky pivot")
    return 2.0 * float(np.sum(np.log(d))) / _LN2


def log2_det_hermitian_batch(A: np.ndarray) -> np.ndarray:
    """Batched variant of :func:`log2_det_hermitian` over leading axes."""
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    d = np.real(np.diagonal(L, axis1=-2, axis2=-1))
    return 2.0 * np.sum(np.log(d), axis=-1) / _LN2


def jacobi_eigenvalues(A, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues (ascending) of a Hermitian matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol * ||A||_F``.
    """
    A = np.array(_as_matrix(A), dtype=complex)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ConfigError(f"matrix must be square, got {A.shape}")
    A = 0.5 * (A + A.conj().T)
    scale = np.linalg.norm(A)
    if scale == 0.0 or n == 1:
        return np.sort(np.real(np.diagonal(A)))
    target = tol * scale
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diagonal(A)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # U acts on columns p, q: [[c, s], [-s*conj(phase), c*conj(phase)]]
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * np.conj(phase) * cq
                A[:, q] = s * cp + c * np.conj(phase) * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * phase * rq
                A[q, :] = s * rp + c * phase * rq
                A[p, q] = A[q, p] = 0.0
    else:
        raise ArithmeticError("Jacobi sweeps did not converge")
    return np.sort(np.real(np.diagonal(A)))


def squared_singular_values(M) -> np.ndarray:
    """Squared singular values of ``M`` (``min(rows, cols)`` of them), ascending."""
    M = _as_matrix(M)
    rows, cols = M.shape
    G = gram(M, cols, rows)
    ev = jacobi_eigenvalues(G)
    return np.clip(ev, 0.0, None)


def cofactor(A, n: int, m: int) -> float:
    """Signed (n, m) cofactor of a real square matrix, 1-based indices.

    The determinant of the 0x0 minor is taken as 1.
    """
    A = np.asarray(A, dtype=float)
    q = A.shape[0]
    if A.shape != (q, q):
        raise ConfigError(f"matrix must be square, got {A.shape}")
    if not (1 <= n <= q and 1 <= m <= q):
        raise ConfigError(f"cofactor index ({n}, {m}) out of range for q={q}")
    if q == 1:
        return 1.0
    minor = np.delete(np.delete(A, n - 1, axis=0), m - 1, axis=1)
    sign = -1.0 if (n + m) % 2 else 1.0
    return sign * float(np.linalg.det(minor))


def cofactor_matrix(A) -> np.ndarray:
    """All cofactors of ``A``; entry ``[n-1, m-1]`` is ``cofactor(A, n, m)``."""
    A = np.asarray(A, dtype=float)
    q = A.shape[0]
    return np.array([[cofactor(A, n, m) for m in range(1, q + 1)] for n in range(1, q + 1)])
