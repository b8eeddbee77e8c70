"""Small dense linear-algebra kernel used by the rest of the package.

Bases are stored as ``(n, k)`` arrays whose columns are orthonormal; the
zero subspace of R^n is an ``(n, 0)`` array.
"""

import numpy as np

RANK_RTOL = 1e-10
_JACOBI_MAX_DIM = 32


def default_rank_tol(A) -> float:
    """Rank tolerance ``1e-10 * max column norm`` (at least tiny)."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return RANK_RTOL
    return RANK_RTOL * max(float(np.max(np.linalg.norm(A, axis=0))), 1e-300)


def as_columns(vectors, dim=None) -> np.ndarray:
    """Coerce a list of vectors or an ``(n, k)`` array into column form."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return vectors.astype(float)
    vecs = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if not vecs:
        if dim is None:
            raise ValueError("dimension is required for an empty vector list")
        return np.zeros((dim, 0))
    return np.column_stack(vecs)


def orthonormalize(vectors, tol=None, dim=None) -> np.ndarray:
    """Orthonormal basis of the span of ``vectors``.

    Modified Gram-Schmidt with one re-orthogonalisation pass. A vector
    whose residual norm falls to ``tol`` or below is treated as dependent
    and dropped.

    Parameters
    ----------
    vectors : array_like
        Either an ``(n, k)`` array of columns or a sequence of vectors.
    tol : float, optional
        Dependence threshold. Defaults to ``1e-10 * max column norm``.
    dim : int, optional
        Ambient dimension, needed only when ``vectors`` is empty.

    Returns
    -------
    ndarray of shape (n, r)
    """
    A = as_columns(vectors, dim)
    if tol is None:
        tol = default_rank_tol(A)
    n, k = A.shape
    Q = np.zeros((n, 0))
    for j in range(k):
        v = A[:, j].copy()
        for _ in range(2):
            for i in range(Q.shape[1]):
                v -= (Q[:, i] @ v) * Q[:, i]
        nv = np.linalg.norm(v)
        if nv > tol:
            Q = np.column_stack([Q, v / nv])
    return Q


def singular_values(A, sweeps=60) -> np.ndarray:
    """Singular values (descending) by one-sided Jacobi rotations."""
    U = np.array(A, dtype=float)
    if U.shape[0] < U.shape[1]:
        U = U.T.copy()
    k = U.shape[1]
    if U.size == 0:
        return np.zeros(0)
    eps = np.finfo(float).eps
    for _ in range(sweeps):
        rotated = False
        for p in range(k - 1):
            for q in range(p + 1, k):
                a = U[:, p] @ U[:, p]
                b = U[:, q] @ U[:, q]
                c = U[:, p] @ U[:, q]
                if abs(c) <= eps * np.sqrt(a * b) or c == 0.0:
                    continue
                rotated = True
                zeta = (b - a) / (2.0 * c)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if zeta == 0.0:
                    t = 1.0
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                up = U[:, p].copy()
                U[:, p] = cs * up - sn * U[:, q]
                U[:, q] = sn * up + cs * U[:, q]
        if not rotated:
            break
    return np.sort(np.linalg.norm(U, axis=0))[::-1]


def operator_norm(A, tol=1e-15, max_iter=20000, seed=0) -> float:
    """Spectral norm ``||A||_2``.

    Small matrices go through Jacobi singular values; larger ones use power
    iteration on ``A^T A`` from a fixed random start.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    if max(A.shape) < _JACOBI_MAX_DIM:
        return float(singular_values(A)[0])
    M = A.T @ A
    v = np.random.default_rng(seed).standard_normal(M.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new_lam = float(v @ w)
        v = w / nw
        if abs(new_lam - lam) <= tol * max(new_lam, 1.0):
            lam = new_lam
            break
        lam = new_lam
    return float(np.sqrt(max(lam, 0.0)))


def solve_least_squares(A, b, tol=None):
    """Minimum-norm least-squares solution of ``A x = b``.

    Returns
    -------
    x : ndarray
    residual_norm : float
        ``||A x - b||``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape[1] == 0:
        return np.zeros(0), float(np.linalg.norm(b))
    smax = np.linalg.norm(A, 2) if A.size else 0.0
    rcond = RANK_RTOL if tol is None else tol / max(smax, 1e-300)
    x = np.linalg.lstsq(A, b, rcond=rcond)[0]
    return x, float(np.linalg.norm(A @ x - b))


def nullspace(A, tol=None) -> np.ndarray:
    """Orthonormal basis of ``ker A`` as columns."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    if tol is None:
        tol = RANK_RTOL * max(s[0] if s.size else 0.0, 1.0)
    rank = int(np.sum(s > tol))
    return vh[rank:].T.copy()


def projection_matrix(basis) -> np.ndarray:
    """Orthogonal projector ``Q Q^T`` onto the span of an orthonormal basis."""
    Q = np.asarray(basis, dtype=float)
    return Q @ Q.T


def complement_basis(basis, tol=None) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement."""
    Q = np.asarray(basis, dtype=float)
    n = Q.shape[0]
    if Q.shape[1] == 0:
        return np.eye(n)
    return nullspace(Q.T, tol)


def subspace_intersection(U, V, tol=None) -> np.ndarray:
    """Orthonormal basis of ``span U ∩ span V``.

    Computed as the null space of the stacked complement projectors.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    n = U.shape[0]
    eye = np.eye(n)
    stacked = np.vstack([eye - projection_matrix(U), eye - projection_matrix(V)])
    return nullspace(stacked, default_rank_tol(stacked) if tol is None else tol)
