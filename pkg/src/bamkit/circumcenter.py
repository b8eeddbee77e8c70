"""Circumcenters of finite point sets and circumcenter maps of operator sets."""

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from . import numkit
from .bam import BamCertificate, Provenance, combineN_product, compose_chain
from .operators import Compose, ConvexCombo, Identity, Operator, Reflector, SampleSpec, check_property
from .sets import as_affine, intersect_affine_many, intersect_subspaces

MAX_POWER_SET = 12


class CircumcenterUndefined(ValueError):
    """The point set has no circumcenter in its affine hull."""


@dataclass
class CCResult:
    point: np.ndarray
    hull_residual: float
    spread: float

    @property
    def exists(self):
        return self.point is not None


def _dedupe(P, tol):
    kept = []
    for p in P:
        if all(np.linalg.norm(p - q) > tol for q in kept):
            kept.append(p)
    return np.array(kept)


def circumcenter(points, tol=None) -> CCResult:
    """Point of ``aff(points)`` equidistant from every point, if any.

    With ``p0`` the first point and ``d_i = p_i - p0``, the candidate is
    ``p0 + Q c`` where ``Q`` is an orthonormal basis of ``span{d_i}`` and
    ``2 <d_i, Q c> = ||d_i||^2`` is solved by least squares. Working in
    ``Q`` instead of the raw Gram matrix keeps nearly coincident points well
    conditioned. The candidate is accepted when its distances to the points
    agree within ``tol`` (default ``1e-8 (1 + diameter)``).
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    diam = max((np.linalg.norm(a - b) for a, b in combinations(P, 2)), default=0.0)
    if tol is None:
        tol = 1e-8 * (1.0 + diam)
    P = _dedupe(P, tol)
    if len(P) == 1:
        return CCResult(P[0].copy(), 0.0, 0.0)
    if len(P) == 2:
        return CCResult(0.5 * (P[0] + P[1]), 0.0, 0.0)
    p0 = P[0]
    D = P[1:] - p0
    _, sv, vh = np.linalg.svd(D, full_matrices=False)
    Q = vh[: int(np.sum(sv > 1e-12 * max(diam, 1e-300)))].T
    b = 0.5 * np.sum(D * D, axis=1)
    c, _ = numkit.solve_least_squares(D @ Q, b)
    p = p0 + Q @ c
    _, hull_residual = numkit.solve_least_squares(D.T, p - p0)
    dists = np.linalg.norm(P - p, axis=1)
    spread = float(dists.max() - dists.min())
    if spread > tol or hull_residual > tol:
        return CCResult(None, hull_residual, spread)
    return CCResult(p, hull_residual, spread)


class OperatorSet:
    """Finite set of operators with the flags the circumcenter theory needs.

    ``all_isometries`` is decided on 500 sampled pairs.
    """

    def __init__(self, ops, dim=None, spec=None):
        self.ops = list(ops)
        self.dim = dim if dim is not None else next(op.dim for op in self.ops if op.dim is not None)
        self.contains_id = any(isinstance(op, Identity) for op in self.ops)
        spec = spec or SampleSpec(seed=7, count=500, half_width=10.0)
        self.all_isometries = all(
            check_property(op, "isometry", spec=spec).passed for op in self.ops
            if not isinstance(op, Identity))
        self.suite = None
        self.words = None

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def images(self, x):
        return np.array([op(x) for op in self.ops])


def cc_map_eval(S: OperatorSet, x, tol=None):
    """``CC(S(x))``, or ``None`` when that circumcenter does not exist."""
    return circumcenter(S.images(x), tol).point


class CircumcenterOf(Operator):
    """The circumcenter map of an operator set, as an operator."""

    def __init__(self, S: OperatorSet):
        self.S = S
        self.dim = S.dim

    def _apply(self, X):
        out = np.empty_like(X)
        for i, x in enumerate(X):
            p = cc_map_eval(self.S, x)
            if p is None:
                raise CircumcenterUndefined(f"no circumcenter at {x.tolist()}")
            out[i] = p
        return out

    def __repr__(self):
        return f"CC{{{', '.join(map(repr, self.S.ops))}}}"


class SuiteKind(str, Enum):
    ALL_REFLECTORS = "all_reflectors"
    CUMULATIVE = "cumulative"
    POWER_SET_PRODUCTS = "power_set_products"
    SYMMETRIC_PRODUCT = "symmetric_product"


def _reduce(word):
    """Cancel adjacent repeats; reflectors are involutions."""
    out = []
    for i in word:
        if out and out[-1] == i:
            out.pop()
        else:
            out.append(i)
    return tuple(out)


def _words(m, kind):
    if kind is SuiteKind.ALL_REFLECTORS:
        return [()] + [(i,) for i in range(m)]
    if kind is SuiteKind.CUMULATIVE:
        return [tuple(range(k)) for k in range(m + 1)]
    if kind is SuiteKind.POWER_SET_PRODUCTS:
        if m > MAX_POWER_SET:
            raise ValueError(f"power-set suite limited to {MAX_POWER_SET} subspaces")
        seq = list(range(m))
    else:
        seq = list(range(m)) + list(range(m - 2, -1, -1))
        if len(seq) > MAX_POWER_SET:
            raise ValueError(f"symmetric suite limited to {MAX_POWER_SET} factors")
    words = []
    for r in range(len(seq) + 1):
        for idx in combinations(range(len(seq)), r):
            w = _reduce(seq[i] for i in idx)
            if w not in words:
                words.append(w)
    return words


def build_reflection_suite(subspaces, kind) -> OperatorSet:
    """Reflector products over the given affine subspaces.

    Words are applied left to right, so ``(0, 1)`` means ``R_1 R_0``.
    """
    kind = SuiteKind(kind)
    subspaces = [as_affine(U) for U in subspaces]
    if not subspaces:
        raise ValueError("need at least one subspace")
    refl = [Reflector(U) for U in subspaces]
    dim = subspaces[0].dim
    ops = []
    words = _words(len(subspaces), kind)
    for w in words:
        if not w:
            ops.append(Identity(dim))
        elif len(w) == 1:
            ops.append(refl[w[0]])
        else:
            ops.append(Compose([refl[i] for i in reversed(w)]))
    S = OperatorSet(ops, dim)
    S.suite = (subspaces, kind)
    S.words = words
    return S


def map_rate(subspaces) -> float:
    """``||P_{U_m} ... P_{U_1} P_{W^perp}||`` with ``W`` the intersection."""
    pars = [as_affine(U).par for U in subspaces]
    if len(pars) < 2:
        raise ValueError("map_rate needs at least two subspaces")
    n = pars[0].dim
    M = np.eye(n)
    for U in pars:
        M = U.projection_matrix @ M
    W = intersect_subspaces(pars)
    return numkit.operator_norm(M @ (np.eye(n) - W.projection_matrix))


def _averaged_rate(pars, kind):
    n = pars[0].dim
    eye = np.eye(n)
    R = [2.0 * U.projection_matrix - eye for U in pars]
    m = len(R)
    if kind is SuiteKind.ALL_REFLECTORS:
        A = sum(0.5 * (eye + Ri) for Ri in R) / m
    else:
        A = 0.5 * (eye + R[0])
        prefix = R[0]
        for Ri in R[1:]:
            A += 0.5 * eye + 0.5 * (0.5 * eye + 0.5 * Ri) @ prefix
            prefix = Ri @ prefix
        A /= m
    W = intersect_subspaces(pars)
    return numkit.operator_norm(A @ (eye - W.projection_matrix))


def crm_certificate(subspaces, kind) -> BamCertificate:
    """Certificate for the circumcenter map of a reflection suite.

    Product suites use the alternating-projection rate (squared for the
    symmetric suite). Reflector and cumulative suites use the norm of an
    averaged matrix lying in the affine hull of the suite.
    """
    kind = SuiteKind(kind)
    subspaces = [as_affine(U) for U in subspaces]
    fixed = intersect_affine_many(subspaces)
    if fixed is None:
        raise ValueError("subspaces have empty intersection")
    pars = [U.par for U in subspaces]
    if kind in (SuiteKind.POWER_SET_PRODUCTS, SuiteKind.SYMMETRIC_PRODUCT):
        if len(pars) == 1:
            gamma = 0.0
        else:
            gamma = map_rate(pars)
            if kind is SuiteKind.SYMMETRIC_PRODUCT:
                gamma = gamma ** 2
    else:
        gamma = _averaged_rate(pars, kind)
    return BamCertificate(fixed, float(gamma), Provenance.CIRCUMCENTER, {"kind": kind.value})


def cc_compose_combine(parts, mode, weights=None):
    """Compose or combine circumcenter maps of reflection suites.

    ``parts`` are suites from :func:`build_reflection_suite` in application
    order. Returns the operator and its certificate.
    """
    certs = []
    ops = []
    for S in parts:
        if S.suite is None:
            raise ValueError("each part must come from build_reflection_suite")
        certs.append(crm_certificate(*S.suite))
        ops.append(CircumcenterOf(S))
    if mode == "compose":
        return Compose(list(reversed(ops))), compose_chain(certs)
    if mode == "combine":
        if weights is None:
            weights = np.full(len(ops), 1.0 / len(ops))
        return ConvexCombo(weights, ops), combineN_product(certs, weights)
    raise ValueError(f"unknown mode {mode!r}")
