"""Closed convex sets with exact metric projections.

Every set exposes ``project`` and ``reflect``; both accept a single point of
shape ``(n,)`` or a batch of shape ``(N, n)``.
"""

from dataclasses import dataclass

import numpy as np

from . import numkit

MEMBERSHIP_TOL = 1e-9


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def _restore(X, single):
    return X[0] if single else X


class ConvexSet:
    """Base class: subclasses implement ``_project`` on a 2-D batch."""

    dim: int

    def project(self, x):
        X, single = _as_batch(x)
        return _restore(self._project(X), single)

    def reflect(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * self.project(x) - x

    def distance(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.project(x), axis=-1)

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return np.all(self.distance(x) <= tol)

    def translate(self, v):
        raise NotImplementedError

    def _project(self, X):
        raise NotImplementedError


class LinearSubspace(ConvexSet):
    """Linear subspace stored through an orthonormal basis ``(n, k)``."""

    def __init__(self, basis, dim=None, orthonormal=False):
        if orthonormal:
            self.basis = np.asarray(basis, dtype=float)
        else:
            self.basis = numkit.orthonormalize(basis, dim=dim)
        self.dim = self.basis.shape[0]
        self._P = numkit.projection_matrix(self.basis)

    @classmethod
    def span(cls, *vectors, dim=None):
        return cls(list(vectors), dim=dim)

    @classmethod
    def whole(cls, n):
        return cls(np.eye(n), orthonormal=True)

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, 0)), orthonormal=True)

    @property
    def rank(self):
        return self.basis.shape[1]

    @property
    def projection_matrix(self):
        return self._P

    @property
    def par(self):
        return self

    @property
    def anchor(self):
        return np.zeros(self.dim)

    def complement(self):
        return LinearSubspace(numkit.complement_basis(self.basis), orthonormal=True)

    def translate(self, v):
        return AffineSubspace(np.asarray(v, dtype=float), self)

    def _project(self, X):
        return X @ self._P

    def __repr__(self):
        return f"LinearSubspace(dim={self.dim}, rank={self.rank})"


class AffineSubspace(ConvexSet):
    """``anchor + par``; the anchor is normalised to the point nearest 0."""

    def __init__(self, anchor, par):
        if not isinstance(par, LinearSubspace):
            par = LinearSubspace(par)
        a = np.asarray(anchor, dtype=float)
        self.par = par
        self.anchor = a - par.project(a)
        self.dim = par.dim

    @classmethod
    def line(cls, point, direction):
        return cls(point, LinearSubspace.span(direction))

    @property
    def rank(self):
        return self.par.rank

    def translate(self, v):
        return AffineSubspace(self.anchor + np.asarray(v, dtype=float), self.par)

    def _project(self, X):
        return self.anchor + (X - self.anchor) @ self.par.projection_matrix

    def __repr__(self):
        return f"AffineSubspace(anchor={self.anchor.tolist()}, rank={self.rank})"


class Singleton(AffineSubspace):
    def __init__(self, point):
        point = np.asarray(point, dtype=float)
        super().__init__(point, LinearSubspace.zero(point.size))
        self.point = point

    def translate(self, v):
        return Singleton(self.point + np.asarray(v, dtype=float))

    def _project(self, X):
        return np.broadcast_to(self.point, X.shape).copy()

    def __repr__(self):
        return f"Singleton({self.point.tolist()})"


class Ball(ConvexSet):
    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        self.dim = self.center.size

    def translate(self, v):
        return Ball(self.center + np.asarray(v, dtype=float), self.radius)

    def _project(self, X):
        d = X - self.center
        nrm = np.linalg.norm(d, axis=1, keepdims=True)
        scale = np.where(nrm > self.radius, self.radius / np.maximum(nrm, 1e-300), 1.0)
        return self.center + d * scale

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class Orthant(ConvexSet):
    """Translated nonnegative orthant ``apex + R^n_+``."""

    def __init__(self, dim, apex=None):
        self.dim = int(dim)
        self.apex = np.zeros(self.dim) if apex is None else np.asarray(apex, dtype=float)

    def translate(self, v):
        return Orthant(self.dim, self.apex + np.asarray(v, dtype=float))

    def _project(self, X):
        return self.apex + np.maximum(X - self.apex, 0.0)

    def __repr__(self):
        return f"Orthant(dim={self.dim})"


class OrthantBall(ConvexSet):
    """``R^n_+ ∩ ball(0, radius)``; projecting onto the orthant first and then
    onto the ball is exact for a cone intersected with a centred ball."""

    def __init__(self, dim, radius=1.0, shift=None):
        self.dim = int(dim)
        self.radius = float(radius)
        self.shift = np.zeros(self.dim) if shift is None else np.asarray(shift, dtype=float)
        self._ball = Ball(np.zeros(self.dim), self.radius)

    def translate(self, v):
        return OrthantBall(self.dim, self.radius, self.shift + np.asarray(v, dtype=float))

    def _project(self, X):
        Y = np.maximum(X - self.shift, 0.0)
        return self.shift + self._ball.project(Y)

    def __repr__(self):
        return f"OrthantBall(dim={self.dim}, radius={self.radius})"


class Segment(ConvexSet):
    """Closed segment ``[a, b]``."""

    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.dim = self.a.size

    def translate(self, v):
        v = np.asarray(v, dtype=float)
        return Segment(self.a + v, self.b + v)

    def _project(self, X):
        d = self.b - self.a
        dd = d @ d
        if dd == 0.0:
            return np.broadcast_to(self.a, X.shape).copy()
        t = np.clip((X - self.a) @ d / dd, 0.0, 1.0)
        return self.a + t[:, None] * d

    def __repr__(self):
        return f"Segment({self.a.tolist()}, {self.b.tolist()})"


class TwoBallIntersection(ConvexSet):
    """Intersection of two closed balls (a lens when they overlap)."""

    def __init__(self, ball1, ball2):
        if ball1.dim != ball2.dim:
            raise ValueError("balls live in different dimensions")
        gap = np.linalg.norm(ball1.center - ball2.center)
        if gap > ball1.radius + ball2.radius + MEMBERSHIP_TOL:
            raise ValueError("the two balls do not intersect")
        self.ball1 = ball1
        self.ball2 = ball2
        self.dim = ball1.dim

    def translate(self, v):
        return TwoBallIntersection(self.ball1.translate(v), self.ball2.translate(v))

    def _rim(self, X):
        c1, r1 = self.ball1.center, self.ball1.radius
        c2, r2 = self.ball2.center, self.ball2.radius
        d = np.linalg.norm(c2 - c1)
        u = (c2 - c1) / d
        a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d)
        h = np.sqrt(max(r1 * r1 - a * a, 0.0))
        m = c1 + a * u
        Y = X - m
        Y = Y - np.outer(Y @ u, u)
        nrm = np.linalg.norm(Y, axis=1, keepdims=True)
        fallback = numkit.complement_basis(u[:, None])[:, 0]
        dirs = np.where(nrm > 1e-15, Y / np.maximum(nrm, 1e-300), fallback)
        return m + h * dirs

    def _project(self, X):
        p1 = self.ball1._project(X)
        ok1 = np.linalg.norm(p1 - self.ball2.center, axis=1) <= self.ball2.radius + MEMBERSHIP_TOL
        out = p1.copy()
        rest = ~ok1
        if np.any(rest):
            p2 = self.ball2._project(X[rest])
            ok2 = np.linalg.norm(p2 - self.ball1.center, axis=1) <= self.ball1.radius + MEMBERSHIP_TOL
            sub = p2.copy()
            if np.any(~ok2):
                sub[~ok2] = self._rim(X[rest][~ok2])
            out[rest] = sub
        return out

    def __repr__(self):
        return f"TwoBallIntersection({self.ball1!r}, {self.ball2!r})"


def as_affine(C):
    """View a linear or affine subspace as an :class:`AffineSubspace`."""
    if isinstance(C, AffineSubspace):
        return C
    if isinstance(C, LinearSubspace):
        return AffineSubspace(np.zeros(C.dim), C)
    raise TypeError(f"{C!r} is not an affine subspace")


def parallel_subspace(C) -> LinearSubspace:
    return as_affine(C).par


@dataclass(frozen=True)
class FriedrichsResult:
    cosine: float
    dim_intersection: int


def _quotient_basis(U, W):
    """Orthonormal basis of ``U ∩ W^perp`` for ``W ⊆ U``."""
    k = U.shape[1] - W.shape[1]
    if k <= 0:
        return np.zeros((U.shape[0], 0))
    M = U - W @ (W.T @ U)
    left, _, _ = np.linalg.svd(M, full_matrices=False)
    return left[:, :k]


def friedrichs_cosine(U, V, tol=None) -> FriedrichsResult:
    """Cosine of the Friedrichs angle between two subspaces.

    Affine inputs are replaced by their parallel subspaces. The value is the
    largest singular value of ``A^T B`` where ``A`` and ``B`` are orthonormal
    bases of each subspace with the common part removed; it is 0 when either
    quotient is trivial.
    """
    U = parallel_subspace(U)
    V = parallel_subspace(V)
    if U.dim != V.dim:
        raise ValueError("subspaces live in different dimensions")
    W = numkit.subspace_intersection(U.basis, V.basis, tol)
    A = _quotient_basis(U.basis, W)
    B = _quotient_basis(V.basis, W)
    if A.shape[1] == 0 or B.shape[1] == 0:
        return FriedrichsResult(0.0, W.shape[1])
    c = numkit.operator_norm(A.T @ B)
    return FriedrichsResult(float(min(max(c, 0.0), 1.0)), W.shape[1])


def intersect_subspaces(subspaces) -> LinearSubspace:
    subspaces = [parallel_subspace(s) for s in subspaces]
    basis = subspaces[0].basis
    for s in subspaces[1:]:
        basis = numkit.subspace_intersection(basis, s.basis)
    return LinearSubspace(basis, orthonormal=True)


def intersect_affine(A, B, tol=1e-9):
    """Intersection of two affine subspaces, or ``None`` when it is empty."""
    A = as_affine(A)
    B = as_affine(B)
    M = np.hstack([A.par.basis, -B.par.basis])
    rhs = B.anchor - A.anchor
    coeffs, residual = numkit.solve_least_squares(M, rhs)
    if residual > tol * (1.0 + np.linalg.norm(rhs)):
        return None
    point = A.anchor + A.par.basis @ coeffs[: A.rank]
    par = LinearSubspace(numkit.subspace_intersection(A.par.basis, B.par.basis), orthonormal=True)
    if par.rank == 0:
        return Singleton(point)
    return AffineSubspace(point, par)


def intersect_affine_many(sets, tol=1e-9):
    out = as_affine(sets[0])
    for s in sets[1:]:
        out = intersect_affine(out, s, tol)
        if out is None:
            return None
    return out
