"""Best approximation mappings: certificates, constants and iteration traces.

An operator ``G`` with closed convex fixed set ``F`` is certified with
constant ``gamma < 1`` when ``P_F G = P_F`` and
``||Gx - P_F x|| <= gamma * ||x - P_F x||`` for every ``x``.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import numkit
from .operators import Operator, SampleSpec, check_property
from .sets import (AffineSubspace, ConvexSet, LinearSubspace, Singleton, as_affine,
                   friedrichs_cosine, intersect_affine, intersect_affine_many)

COMMUTE_TOL = 1e-8
MIN_DIST = 1e-8
INEQ_TOL = 1e-9


class Provenance(str, Enum):
    COMPOSE2 = "TheoremCompose2"
    COMPOSE_CHAIN = "TheoremComposeChain"
    COMBINE2 = "TheoremCombine2"
    COMBINE_PRODUCT = "TheoremCombineProduct"
    CONTRACTION = "Contraction"
    AVERAGED_LINEAR = "AveragedLinear"
    AVERAGED_PROJECTOR = "AveragedProjector"
    NORMAL_MATRIX = "NormalMatrix"
    CIRCUMCENTER = "TheoremCircumcenter"
    EMPIRICAL = "Empirical"
    PROJECTOR = "Projector"


class BAMViolation(ValueError):
    """Raised when an operator fails a certification check.

    ``witness`` holds the worst offending point (or eigenvalue) when one
    exists; ``witnesses`` holds every offending sample, worst first.
    """

    def __init__(self, reason, witness=None, value=None, witnesses=None):
        super().__init__(reason)
        self.reason = reason
        self.witness = witness
        self.value = value
        if witnesses is None and isinstance(witness, np.ndarray):
            witnesses = np.atleast_2d(witness)
        self.witnesses = witnesses


@dataclass(frozen=True)
class BamCertificate:
    fixed_set: ConvexSet
    gamma: float
    provenance: Provenance
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")

    @property
    def kappa(self):
        """Linear-regularity constant ``1 / (1 - gamma)``."""
        return 1.0 / (1.0 - self.gamma)


def projector_certificate(C: ConvexSet) -> BamCertificate:
    return BamCertificate(C, 0.0, Provenance.PROJECTOR)


def averaged_projector_certificate(C: ConvexSet, gamma: float) -> BamCertificate:
    """Certificate for ``(1 - gamma) P_C + gamma Id``."""
    return BamCertificate(C, float(gamma), Provenance.AVERAGED_PROJECTOR)


# ---------------------------------------------------------------- constants

@dataclass(frozen=True)
class CompositionConstants:
    r: float
    s: float

    @property
    def chosen(self):
        return min(self.r, self.s)


def compose2_constant(gamma1, gamma2, c_f) -> CompositionConstants:
    """Constants for ``G2 o G1`` given each constant and the Friedrichs cosine
    between the two fixed subspaces."""
    for g in (gamma1, gamma2):
        if not 0.0 <= g < 1.0:
            raise ValueError("constants must lie in [0, 1)")
    if not 0.0 <= c_f <= 1.0:
        raise ValueError("cosine must lie in [0, 1]")
    half = (1.0 + c_f) / 2.0
    r = max(np.sqrt(g * g + (1.0 - g * g) * half) for g in (gamma1, gamma2))
    g1s, g2s = gamma1 * gamma1, gamma2 * gamma2
    s = np.sqrt(g1s + g2s - g1s * g2s + (1.0 - g1s) * (1.0 - g2s) * half * half)
    return CompositionConstants(float(r), float(s))


def combine2_constant(gamma1, gamma2, c_f, alpha) -> float:
    """Constant for ``alpha G1 + (1 - alpha) G2``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    half = (1.0 + c_f) / 2.0
    a1 = np.sqrt(gamma1 ** 2 + (1.0 - gamma1 ** 2) * half)
    a2 = np.sqrt(gamma2 ** 2 + (1.0 - gamma2 ** 2) * half)
    return float(max(alpha * a1 + (1.0 - alpha), alpha + (1.0 - alpha) * a2))


def product_constant(gammas, c_f) -> float:
    mu = max(gammas)
    return float(np.sqrt(mu * mu + (1.0 - mu * mu) * (1.0 + c_f) ** 2 / 4.0))


# ------------------------------------------------------ theorem-backed rules

def _common_fixed_set(certs):
    sets = [as_affine(c.fixed_set) for c in certs]
    common = intersect_affine_many(sets)
    if common is None:
        raise BAMViolation("fixed sets have empty intersection")
    return sets, common


def compose2(cert1: BamCertificate, cert2: BamCertificate) -> BamCertificate:
    """Certificate for ``G2 o G1`` (``G1`` applied first)."""
    sets, common = _common_fixed_set([cert1, cert2])
    c_f = friedrichs_cosine(sets[0], sets[1]).cosine
    k = compose2_constant(cert1.gamma, cert2.gamma, c_f)
    return BamCertificate(common, k.chosen, Provenance.COMPOSE2,
                          {"r": k.r, "s": k.s, "c_F": c_f})


def compose_chain(certs) -> BamCertificate:
    """Fold the two-operator rule over ``G_m o ... o G_1``.

    ``certs`` is given in application order and every fixed set must be
    affine. At each step the cosine is taken between the running
    intersection and the next fixed set.
    """
    certs = list(certs)
    if not certs:
        raise ValueError("empty chain")
    running = as_affine(certs[0].fixed_set)
    gamma = certs[0].gamma
    steps = []
    for cert in certs[1:]:
        nxt = as_affine(cert.fixed_set)
        c_f = friedrichs_cosine(running, nxt).cosine
        k = compose2_constant(gamma, cert.gamma, c_f)
        gamma = k.chosen
        running = intersect_affine(running, nxt)
        if running is None:
            raise BAMViolation("fixed sets have empty intersection")
        steps.append({"r": k.r, "s": k.s, "c_F": c_f})
    return BamCertificate(running, gamma, Provenance.COMPOSE_CHAIN, {"steps": steps})


def combine2(cert1: BamCertificate, cert2: BamCertificate, alpha: float) -> BamCertificate:
    """Certificate for ``alpha G1 + (1 - alpha) G2``."""
    sets, common = _common_fixed_set([cert1, cert2])
    c_f = friedrichs_cosine(sets[0], sets[1]).cosine
    gamma = combine2_constant(cert1.gamma, cert2.gamma, c_f, alpha)
    return BamCertificate(common, gamma, Provenance.COMBINE2, {"c_F": c_f, "alpha": alpha})


def product_cosine(subspaces, weights) -> float:
    """Friedrichs cosine between the diagonal and the product of subspaces
    in ``R^n x ... x R^n`` with the weighted inner product.

    The weighted space is mapped isometrically onto the Euclidean one by
    ``x_i -> sqrt(w_i) x_i``; product subspaces are unchanged by that map.
    """
    w = np.asarray(weights, dtype=float)
    subspaces = [as_affine(s).par for s in subspaces]
    n = subspaces[0].dim
    m = len(subspaces)
    diag = np.vstack([np.sqrt(wi) * np.eye(n) for wi in w])
    blocks = np.zeros((m * n, sum(s.rank for s in subspaces)))
    col = 0
    for i, s in enumerate(subspaces):
        blocks[i * n:(i + 1) * n, col:col + s.rank] = s.basis
        col += s.rank
    D = LinearSubspace(diag, orthonormal=True)
    prod = LinearSubspace(blocks, orthonormal=True)
    return friedrichs_cosine(D, prod).cosine


def combineN_product(certs, weights) -> BamCertificate:
    """Certificate for ``sum_i w_i G_i`` through the product-space route."""
    certs = list(certs)
    w = np.asarray(weights, dtype=float)
    if len(w) != len(certs) or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be positive, one per operator, and sum to 1")
    sets, common = _common_fixed_set(certs)
    c_f = product_cosine(sets, w)
    gamma = product_constant([c.gamma for c in certs], c_f)
    return BamCertificate(common, gamma, Provenance.COMBINE_PRODUCT, {"c_F": c_f})


# ------------------------------------------------------- direct certificates

def certify_empirical(op: Operator, fixed_set: ConvexSet, spec: SampleSpec = SampleSpec()) -> BamCertificate:
    """Sampled certificate for ``op`` with the given fixed set.

    Checks that projecting ``Gx`` onto the fixed set agrees with projecting
    ``x``, estimates the constant as the largest ratio
    ``||Gx - P x|| / ||x - P x||``, then re-checks the distance decrease and,
    for affine fixed sets, the strict quasi-nonexpansive inequality.
    Raises :class:`BAMViolation` with a witness on failure.
    """
    X = spec.draw(fixed_set.dim, 0)
    PX = fixed_set.project(X)
    GX = op(X)
    PGX = fixed_set.project(GX)
    gap = np.linalg.norm(PGX - PX, axis=1)
    j = int(np.argmax(gap))
    if gap[j] > COMMUTE_TOL:
        bad = np.flatnonzero(gap > COMMUTE_TOL)
        bad = bad[np.argsort(-gap[bad])]
        raise BAMViolation("projection of Gx differs from projection of x", X[j].copy(),
                           float(gap[j]), X[bad].copy())
    d = np.linalg.norm(X - PX, axis=1)
    mask = d > MIN_DIST
    if np.any(mask):
        ratios = np.linalg.norm(GX - PX, axis=1)[mask] / d[mask]
        k = int(np.argmax(ratios))
        gamma = float(ratios[k])
        if gamma >= 1.0:
            raise BAMViolation("no contraction towards the fixed set", X[mask][k].copy(), gamma)
    else:
        gamma = 0.0
    dG = np.linalg.norm(GX - PGX, axis=1)
    bad = dG > gamma * d + INEQ_TOL
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise BAMViolation("distance to the fixed set does not shrink", X[i].copy())
    if isinstance(fixed_set, (AffineSubspace, LinearSubspace)):
        Y = fixed_set.project(spec.draw(fixed_set.dim, 1))[: len(X)]
        Xs = X[: len(Y)]
        lhs = (np.sum((GX[: len(Y)] - Y) ** 2, axis=1)
               + (1.0 - gamma ** 2) * d[: len(Y)] ** 2)
        rhs = np.sum((Xs - Y) ** 2, axis=1)
        bad = lhs > rhs + INEQ_TOL
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise BAMViolation("strict quasi-nonexpansive inequality fails", Xs[i].copy())
    return BamCertificate(fixed_set, gamma, Provenance.EMPIRICAL,
                          {"samples": int(len(X)), "seed": spec.seed,
                           "half_width": spec.half_width})


def from_contraction(op: Operator, modulus: float, spec: SampleSpec = SampleSpec(),
                     x0=None, tol=1e-12, max_steps=1_000_000) -> BamCertificate:
    """Certificate for a Banach contraction: its unique fixed point is found
    by Picard iteration and the constant is the modulus."""
    if not 0.0 <= modulus < 1.0:
        raise ValueError("modulus must lie in [0, 1)")
    report = check_property(op, "nonexpansive", spec=spec)
    if report.worst_ratio > modulus + INEQ_TOL:
        raise BAMViolation("sampled Lipschitz ratio exceeds the modulus",
                           report.witness[0], report.worst_ratio)
    n = op.dim if op.dim is not None else len(spec.center)
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    for step in range(max_steps):
        y = op(x)
        if np.linalg.norm(y - x) <= tol * (1.0 + np.linalg.norm(x)):
            x = y
            break
        x = y
    else:
        raise BAMViolation("Picard iteration did not settle")
    return BamCertificate(Singleton(x), float(modulus), Provenance.CONTRACTION, {"steps": step + 1})


def from_averaged_linear(A, alphas=None, tol=1e-10) -> BamCertificate:
    """Certificate for an averaged linear map ``A``.

    Averagedness is confirmed on a grid of ``alpha``: some
    ``(A - (1 - alpha) I) / alpha`` must have norm at most 1. The fixed set
    is ``ker(A - I)`` and the constant is ``||A P_{Fix^perp}||``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if alphas is None:
        alphas = np.arange(1, 1000) / 1000.0
    eye = np.eye(n)
    found = None
    for a in alphas:
        if numkit.operator_norm((A - (1.0 - a) * eye) / a) <= 1.0 + tol:
            found = float(a)
            break
    if found is None:
        raise BAMViolation("matrix is not averaged on the alpha grid")
    fix = LinearSubspace(numkit.nullspace(A - eye, 1e-9), orthonormal=True)
    gamma = numkit.operator_norm(A @ (eye - fix.projection_matrix))
    if gamma >= 1.0 - tol:
        raise BAMViolation("averaged map has constant 1 off its fixed space", value=gamma)
    return BamCertificate(fix, float(gamma), Provenance.AVERAGED_LINEAR, {"alpha": found})


def normal_matrix_bam(A, tol=1e-9) -> BamCertificate:
    """Certificate for a normal matrix whose only unit-modulus eigenvalue is 1.

    The constant is the largest modulus over eigenvalues different from 1.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    scale = max(np.linalg.norm(A, 2), 1.0)
    if np.linalg.norm(A @ A.T - A.T @ A) > tol * scale * scale:
        raise BAMViolation("matrix is not normal")
    eig = np.linalg.eigvals(A)
    mods = np.abs(eig)
    not_one = np.abs(eig - 1.0) > tol
    if np.any(mods > 1.0 + tol):
        raise BAMViolation("spectral radius exceeds 1", witness=complex(eig[np.argmax(mods)]))
    unit = not_one & (mods >= 1.0 - tol)
    if np.any(unit):
        raise BAMViolation("unit-modulus eigenvalue other than 1",
                           witness=complex(eig[np.flatnonzero(unit)[0]]))
    gamma = float(mods[not_one].max()) if np.any(not_one) else 0.0
    fix = LinearSubspace(numkit.nullspace(A - np.eye(A.shape[0]), 1e-9), orthonormal=True)
    return BamCertificate(fix, gamma, Provenance.NORMAL_MATRIX)


# --------------------------------------------------------------- iteration

ROUNDOFF = 1e-12


@dataclass
class IterationTrace:
    """Iterates, errors ``||x_k - P_F x_0||`` and ratios against ``gamma^k``.

    ``roundoff`` is the absolute error floor ``1e-12 (1 + ||x_0||)`` below
    which errors are indistinguishable from rounding.
    """

    iterates: np.ndarray
    errors: np.ndarray
    bound_ratios: np.ndarray
    gamma: float = 0.0
    roundoff: float = 0.0

    def worst_ratio(self):
        """Largest ``(errors[k] - roundoff) / (gamma^k errors[0])``."""
        bound = self.gamma ** np.arange(len(self.errors)) * self.errors[0]
        excess = np.maximum(self.errors - self.roundoff, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(bound > 0, excess / np.where(bound > 0, bound, 1.0),
                         np.where(excess > 0, np.inf, 0.0))
        return float(r.max())

    def rate_law_holds(self, rel_tol=1e-9):
        return self.worst_ratio() <= 1.0 + rel_tol


def iterate(op: Operator, cert: BamCertificate, x0, steps: int) -> IterationTrace:
    """Run ``x_{k+1} = G x_k`` and compare ``||x_k - P_F x_0||`` with
    ``gamma^k ||x_0 - P_F x_0||``."""
    x = np.asarray(x0, dtype=float)
    target = cert.fixed_set.project(x)
    xs = [x]
    for _ in range(steps):
        x = op(x)
        xs.append(x)
    xs = np.array(xs)
    errors = np.linalg.norm(xs - target, axis=1)
    bound = cert.gamma ** np.arange(steps + 1) * errors[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bound > 0, errors / np.where(bound > 0, bound, 1.0),
                          np.where(errors > 0, np.inf, 0.0))
    roundoff = ROUNDOFF * (1.0 + float(np.linalg.norm(xs[0])))
    return IterationTrace(xs, errors, ratios, float(cert.gamma), roundoff)


# ------------------------------------------------------------ diagnostics

@dataclass(frozen=True)
class PointDiagnostics:
    beta1: float
    beta2: float
    bound: float


def point_diagnostics(G1: Operator, U1, U2, x) -> PointDiagnostics:
    """Per-point quantities that govern the composition constant.

    ``beta1 = ||P_{U2} G1 x - P_W x|| / ||G1 x - P_W x||`` and
    ``beta2 = ||P_{U1} x - P_W x|| / ||x - P_W x||`` with ``W = U1 ∩ U2``.
    ``bound`` is ``sqrt((1 + c_F) / 2)``; the smaller beta never exceeds it.
    """
    U1, U2 = as_affine(U1), as_affine(U2)
    W = intersect_affine(U1, U2)
    x = np.asarray(x, dtype=float)
    pw = W.project(x)
    g = G1(x)

    def ratio(a, b):
        nb = np.linalg.norm(b - pw)
        return float(np.linalg.norm(a - pw) / nb) if nb > 0 else 0.0

    c_f = friedrichs_cosine(U1, U2).cosine
    return PointDiagnostics(ratio(U2.project(g), g), ratio(U1.project(x), x),
                            float(np.sqrt((1.0 + c_f) / 2.0)))
