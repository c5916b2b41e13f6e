"""Complex matrix kernels used by the detectors.

Everything here operates on 2-D complex numpy arrays. The QR route is
deliberate: the per-stream quantities the detectors need are diagonals of
inverse Gram matrices, and forming H^H H explicitly squares the condition
number. Decomposing once and back-substituting keeps the hot path stable.
"""

import numpy as np

from .errors import ConfigurationError, NumericalRankError

# Relative threshold on diag(R) below which a matrix is treated as rank
# deficient. Scaled by the largest diagonal so it is size- and unit-free.
RANK_RTOL = 1e-12


def _as_cmatrix(a, name="matrix"):
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ConfigurationError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite entries")
    return arr


def matmul(a, b):
    """Product of two complex matrices with explicit dimension checking."""
    a = _as_cmatrix(a, "left factor")
    b = _as_cmatrix(b, "right factor")
    if a.shape[1] != b.shape[0]:
        raise ConfigurationError(
            f"inner dimensions differ: {a.shape} @ {b.shape}"
        )
    return a @ b


def qr_decompose(a):
    """Householder QR with a real non-negative R diagonal.

    Returns (Q, R) with Q square unitary (rows x rows) and R upper
    trapezoidal (rows x cols). LAPACK's Householder factorization leaves
    arbitrary phases on diag(R); post-multiplying Q's leading columns and
    the rows of R by unit phases normalizes diag(R) >= 0 without changing
    the product. Raises NumericalRankError when the numerical column rank
    is deficient.
    """
    a = _as_cmatrix(a)
    rows, cols = a.shape
    if rows < cols:
        raise ConfigurationError(
            f"need at least as many rows as columns, got {a.shape}"
        )
    q, r = np.linalg.qr(a, mode="complete")
    d = np.diagonal(r)[:cols].copy()
    absd = np.abs(d)
    if cols and absd.min() < RANK_RTOL * max(absd.max(), 0.0):
        raise NumericalRankError(
            f"matrix is numerically rank deficient: min |diag R| = {absd.min():.3e}"
        )
    phase = np.ones(cols, dtype=np.complex128)
    nz = absd > 0
    phase[nz] = d[nz] / absd[nz]
    q[:, :cols] *= phase[np.newaxis, :]
    r[:cols, :] *= phase.conj()[:, np.newaxis]
    return q, r


def pseudoinverse(a):
    """Left pseudoinverse (A^H A)^{-1} A^H of a full-column-rank matrix.

    Solved as R x = Q^H from the economy QR factors instead of inverting
    the Gram matrix.
    """
    a = _as_cmatrix(a)
    q, r = qr_decompose(a)
    cols = a.shape[1]
    qh = q[:, :cols].conj().T
    return _solve_upper(r[:cols, :cols], qh)


def gram_inverse_diag(a):
    """diag((A^H A)^{-1}) for a full-column-rank A, as a real vector.

    With A = QR the Gram inverse is R^{-1} R^{-H}, so entry i is the
    squared 2-norm of row i of R^{-1}.
    """
    a = _as_cmatrix(a)
    _, r = qr_decompose(a)
    cols = a.shape[1]
    rinv = _solve_upper(r[:cols, :cols], np.eye(cols, dtype=np.complex128))
    return np.sum(np.abs(rinv) ** 2, axis=1)


def _solve_upper(r, b):
    """Back substitution for upper-triangular r against each column of b."""
    n = r.shape[0]
    x = np.array(b, dtype=np.complex128, copy=True)
    for i in range(n - 1, -1, -1):
        x[i] -= r[i, i + 1:] @ x[i + 1:]
        x[i] /= r[i, i]
    return x
