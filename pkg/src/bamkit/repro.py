"""Registry of scripted worked examples, each re-derived as pass/fail checks."""

from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np

from .bam import (BAMViolation, averaged_projector_certificate, certify_empirical,
                  combine2_constant, compose2_constant, iterate)
from .circumcenter import (CircumcenterOf, build_reflection_suite, cc_compose_combine,
                           cc_map_eval, crm_certificate, map_rate)
from .operators import (Averaged, Compose, ConvexCombo, Identity, LinearMap, Projector,
                        Reflector, SampleSpec)
from .sets import (AffineSubspace, Ball, LinearSubspace, Orthant, OrthantBall, Segment,
                   TwoBallIntersection, friedrichs_cosine, intersect_affine)


@dataclass
class Check:
    description: str
    expected: object
    measured: object
    tolerance: float
    passed: bool


@dataclass
class ReproReport:
    example_id: str
    checks: list = field(default_factory=list)

    @property
    def overall(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {"example_id": self.example_id, "overall": self.overall,
                "checks": [asdict(c) for c in self.checks]}


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def _close(desc, expected, measured, tol):
    err = float(np.max(np.abs(np.asarray(expected, dtype=float) - np.asarray(measured, dtype=float))))
    return Check(desc, _plain(expected), _plain(measured), tol, bool(err <= tol))


def _holds(desc, expected, measured, ok):
    return Check(desc, _plain(expected), _plain(measured), 0.0, bool(ok))


def _raises(fn):
    try:
        fn()
    except BAMViolation as exc:
        return exc
    return None


def orthant_ball_oracle(x, radius=1.0):
    """Nearest point of ``R^n_+ ∩ ball(0, radius)`` by enumerating active sets.

    The minimiser zeroes some coordinates and is either the clipped point or
    that point rescaled onto the sphere; every candidate is tried.
    """
    x = np.asarray(x, dtype=float)
    best, best_d = None, np.inf
    for mask in product([False, True], repeat=x.size):
        y = np.where(mask, 0.0, x)
        cands = [y]
        ny = np.linalg.norm(y)
        if ny > 0:
            cands.append(radius * y / ny)
        for c in cands:
            if np.all(c >= -1e-15) and np.linalg.norm(c) <= radius + 1e-15:
                d = np.linalg.norm(x - c)
                if d < best_d:
                    best, best_d = c, d
    return best


def _rate_checks(op, cert, dim, starts, steps, rng, label):
    worst = 0.0
    for _ in range(starts):
        tr = iterate(op, cert, rng.uniform(-5, 5, dim), steps)
        worst = max(worst, tr.worst_ratio())
    return _holds(f"{label}: errors[k] <= gamma^k errors[0] over {starts} starts",
                  "<= 1 + 1e-9", worst, worst <= 1.0 + 1e-9)


# --------------------------------------------------------------- examples

def line_cone():
    U = AffineSubspace.line([0.0, 1.0], [1.0, -1.0])
    K = Orthant(2)
    F = Segment([1.0, 0.0], [0.0, 1.0])
    spec = SampleSpec(seed=0, count=100_000, center=(0.0, 0.0), half_width=10.0)
    out = []
    exc = _raises(lambda: certify_empirical(Compose([Projector(U), Projector(K)]), F, spec))
    out.append(_holds("P_U P_K is rejected", "violation",
                      None if exc is None else exc.reason, exc is not None))
    if exc is not None:
        W = exc.witnesses
        band = ((W[:, 0] - 1 < W[:, 1]) & (W[:, 1] < W[:, 0] + 1)
                & ~np.all(W >= 0, axis=1) & ~np.all(W < 0, axis=1))
        out.append(_holds("violating samples in the band x1-1 < x2 < x1+1 outside K",
                          "> 0", int(band.sum()), band.any()))
    cert = certify_empirical(Compose([Projector(K), Projector(U)]), F, spec)
    out.append(_close("P_K P_U empirical constant", np.sqrt(0.5), cert.gamma, 1e-3))
    L1 = LinearSubspace.span([1.0, 0.0])
    meet = intersect_affine(U, L1)
    out.append(_close("U meets the x1-axis at (1, 0)", [1.0, 0.0], meet.anchor, 1e-12))
    out.append(_close("cosine between par U and the x1-axis",
                      np.sqrt(0.5), friedrichs_cosine(U, L1).cosine, 1e-12))
    return out


def cone_ball():
    K = Orthant(2)
    B = Ball([0.0, 0.0], 1.0)
    KB = OrthantBall(2, 1.0)
    X = SampleSpec(seed=1, count=2000, center=(0.0, 0.0), half_width=3.0).draw(2)
    PBPK = Compose([Projector(B), Projector(K)])(X)
    oracle = np.array([orthant_ball_oracle(x) for x in X])
    out = [_close("P_B P_K equals the projection onto K ∩ B", 0.0,
                  np.max(np.linalg.norm(PBPK - oracle, axis=1)), 1e-9)]
    x = np.array([1.0, -1.0])
    val = KB.project(Compose([Projector(K), Projector(B)])(x))
    out.append(_close("P_(K∩B) P_K P_B (1,-1)", [1 / np.sqrt(2), 0.0], val, 1e-9))
    out.append(_close("P_(K∩B) (1,-1)", [1.0, 0.0], KB.project(x), 1e-12))
    exc = _raises(lambda: certify_empirical(Compose([Projector(K), Projector(B)]), KB,
                                            SampleSpec(seed=0, count=2000, center=(0.0, 0.0),
                                                       half_width=3.0, include=(x,))))
    out.append(_holds("P_K P_B is rejected", "violation",
                      None if exc is None else exc.reason, exc is not None))
    return out


def two_balls_scan(x1s=None, x2s=None):
    """Gap ``||P_L P_K2 P_K1 x - P_L x||`` on a grid, points outside both balls."""
    K1 = Ball([-1.0, 0.0], 2.0)
    K2 = Ball([1.0, 0.0], 2.0)
    L = TwoBallIntersection(K1, K2)
    x1s = np.linspace(-4.0, -0.1, 40) if x1s is None else x1s
    x2s = np.linspace(0.1, 3.0, 30) if x2s is None else x2s
    X = np.array([(a, b) for a in x1s for b in x2s])
    outside = (K1.distance(X) > 1e-9) & (K2.distance(X) > 1e-9)
    X = X[outside]
    gaps = np.linalg.norm(L.project(K2.project(K1.project(X))) - L.project(X), axis=1)
    return X, gaps


def two_balls():
    X, gaps = two_balls_scan()
    j = int(np.argmax(gaps))
    return [
        _holds("witness with x1 < 0, x2 != 0 and gap > 1e-3", "> 1e-3",
               {"x": X[j].tolist(), "gap": float(gaps[j])}, gaps[j] > 1e-3),
        _holds("gap is nonzero at every scanned point outside both balls", "> 0",
               float(gaps.min()), gaps.min() > 1e-12),
    ]


def alpha_pu():
    out = []
    U = LinearSubspace.span([1.0, 0.0])
    spec = SampleSpec(seed=2, count=100_000, center=(0.0, 0.0), half_width=10.0)
    for a in (0.25, 0.5, 0.75):
        op = ConvexCombo([a, 1 - a], [Projector(U), Projector(U.complement())])
        g = certify_empirical(op, LinearSubspace.zero(2), spec).gamma
        out.append(_close(f"alpha={a}: empirical constant", max(a, 1 - a), g, 1e-6))
        bound = combine2_constant(0.0, 0.0, 0.0, a)
        out.append(_holds(f"alpha={a}: combination constant exceeds it", f"> {g}", bound, bound > g))
    return out


def comp_constants():
    grid = np.arange(0, 1000) * 1e-3
    diff = np.array([compose2_constant(g, g, 0.0).s - compose2_constant(g, g, 0.0).r for g in grid])
    flips = np.flatnonzero(np.diff((diff >= 0).astype(int)))
    k = flips[0] + 1 if flips.size else -1
    root = np.sqrt(3) / 3
    out = [_holds("sign(s - r) flips once, at sqrt(3)/3", root,
                  [float(grid[k - 1]), float(grid[k])] if k > 0 else None,
                  flips.size == 1 and grid[k - 1] < root <= grid[k])]
    rng = np.random.default_rng(3)
    worst = max(compose2_constant(g, 0.0, c).s - compose2_constant(g, 0.0, c).r
                for g, c in rng.uniform(0, 0.999, (500, 2)))
    out.append(_holds("gamma2 = 0 gives s <= r", "<= 0", float(worst), worst <= 1e-15))
    L1, L2 = LinearSubspace.span([1.0, 0.0]), LinearSubspace.span([1.0, 1.0])
    c = friedrichs_cosine(L1, L2).cosine
    out.append(_close("two projectors: min(r, s) = (1 + c_F)/2", (1 + c) / 2,
                      compose2_constant(0.0, 0.0, c).chosen, 1e-15))
    g = certify_empirical(Compose([Projector(L2), Projector(L1)]), LinearSubspace.zero(2),
                          SampleSpec(seed=4, count=20_000, center=(0.0, 0.0))).gamma
    out.append(_close("two projectors: empirical constant equals c_F", c, g, 1e-4))
    return out


def bam_pro():
    C = Ball([2.0, 0.0], 1.0)
    spec = SampleSpec(seed=5, count=5000, center=(2.0, 0.0), half_width=5.0)
    out = [_close("projector has constant 0", 0.0,
                  certify_empirical(Projector(C), C, spec).gamma, 0.0)]
    for g in (0.25, 0.5, 0.9):
        out.append(_close(f"(1-{g}) P_C + {g} Id has constant {g}", g,
                          certify_empirical(Averaged(Projector(C), g), C, spec).gamma, 1e-12))
    out.append(_close("identity has constant 0", 0.0,
                      certify_empirical(Identity(2), LinearSubspace.whole(2), spec).gamma, 0.0))
    cert = averaged_projector_certificate(C, 0.5)
    out.append(_rate_checks(Averaged(Projector(C), 0.5), cert, 2, 10, 30,
                            np.random.default_rng(5), "averaged projector"))
    return out


def not_linear_regular():
    C = Ball([0.0, 0.0], 1.0)
    x = np.array([2.0, 0.0])
    R = Reflector(C)
    out = [_close("R_C (2,0)", [0.0, 0.0], R(x), 1e-15),
           _close("P_C R_C (2,0)", [0.0, 0.0], C.project(R(x)), 1e-15),
           _close("P_C (2,0)", [1.0, 0.0], C.project(x), 1e-15)]
    exc = _raises(lambda: certify_empirical(R, C, SampleSpec(seed=6, count=2000, center=(0.0, 0.0),
                                                             half_width=4.0, include=(x,))))
    out.append(_holds("R_C is rejected", "violation", None if exc is None else exc.reason,
                      exc is not None))
    X = SampleSpec(seed=6, count=2000, center=(0.0, 0.0), half_width=4.0).draw(2)
    X = X[C.distance(X) > 1e-8]
    ratio = C.distance(X) / np.linalg.norm(X - R(X), axis=1)
    out.append(_close("linear regularity with constant 1/2", 0.5, ratio.max(), 1e-12))
    return out


def _ccs_suites():
    U1 = LinearSubspace.span([1.0, 0.0])
    U2 = LinearSubspace.span([1.0, 1.0])
    U3 = LinearSubspace.span([0.0, 1.0])
    return (build_reflection_suite([U1, U2], "all_reflectors"),
            build_reflection_suite([U2, U3], "all_reflectors"))


def ccs1_ccs2():
    S1, S2 = _ccs_suites()
    op, cert = cc_compose_combine([S1, S2], "compose")
    out = [_holds("CC_S2 CC_S1 certified with Fix = {(0,0)}", [0.0, 0.0],
                  cert.fixed_set.anchor.tolist(),
                  cert.fixed_set.rank == 0 and np.allclose(cert.fixed_set.anchor, 0.0))]
    X = SampleSpec(seed=7, count=1000, center=(0.0, 0.0), half_width=10.0).draw(2)
    c1, c2 = CircumcenterOf(S1), CircumcenterOf(S2)
    val = np.max(np.abs(c1(c2(c1(X)))))
    out.append(_close("CC_S1 CC_S2 CC_S1 is the zero map", 0.0, val, 1e-9))
    out.append(_rate_checks(op, cert, 2, 10, 30, np.random.default_rng(7), "CC_S2 CC_S1"))
    return out


def t2t1():
    P1 = LinearSubspace.span([1.0, 0.0]).projection_matrix
    P2 = LinearSubspace.span([0.0, 1.0]).projection_matrix
    T1, T2 = LinearMap(0.5 * P1), LinearMap(0.5 * P2)
    X = SampleSpec(seed=8, count=1000, center=(0.0, 0.0)).draw(2)
    x = np.array([1.0, 1.0])
    return [
        _close("T2 T1 is the zero map", 0.0, np.max(np.abs(Compose([T2, T1])(X))), 0.0),
        _holds("T1 is not idempotent", "T1 T1 x != T1 x", float(np.linalg.norm(T1(T1(x)) - T1(x))),
               np.linalg.norm(T1(T1(x)) - T1(x)) > 0.1),
        _holds("T2 is not idempotent", "T2 T2 x != T2 x", float(np.linalg.norm(T2(T2(x)) - T2(x))),
               np.linalg.norm(T2(T2(x)) - T2(x)) > 0.1),
    ]


def _random_subspaces(rng, n, dims):
    return [LinearSubspace(rng.standard_normal((n, d))) for d in dims]


def map_rate_example():
    rng = np.random.default_rng(9)
    Us = _random_subspaces(rng, 6, (5, 4, 4))
    S = build_reflection_suite(Us, "power_set_products")
    cert = crm_certificate(Us, "power_set_products")
    out = [_holds("power-set suite has 2^m members", 8, len(S), len(S) == 8),
           _close("circumcenter rate equals the MAP rate", map_rate(Us), cert.gamma, 1e-10),
           _rate_checks(CircumcenterOf(S), cert, 6, 10, 30, rng, "power-set suite")]
    U = Us[0]
    S0 = build_reflection_suite([U], "all_reflectors")
    X = SampleSpec(seed=9, count=1000, center=np.zeros(6)).draw(6)
    err = max(np.linalg.norm(cc_map_eval(S0, x) - U.project(x)) for x in X)
    out.append(_close("CC{Id, R_U} equals P_U", 0.0, err, 1e-10))
    return out


def symmetric_rate():
    rng = np.random.default_rng(10)
    Us = _random_subspaces(rng, 5, (3, 3))
    S = build_reflection_suite(Us, "symmetric_product")
    cert = crm_certificate(Us, "symmetric_product")
    return [_holds("symmetric suite on two subspaces has six members", 6, len(S), len(S) == 6),
            _close("symmetric rate equals the squared MAP rate", map_rate(Us) ** 2, cert.gamma, 1e-10),
            _rate_checks(CircumcenterOf(S), cert, 5, 10, 30, rng, "symmetric suite")]


def counterexam_discontinuity():
    U1 = LinearSubspace.span([1.0, 0.0])
    U2 = LinearSubspace.span([1.0, 1.0])
    S = build_reflection_suite([U1, U2], "all_reflectors")
    rng = np.random.default_rng(11)
    jump = 0.0
    for t in rng.uniform(0.5, 5.0, 100):
        x = np.array([t, 0.0])
        xp = x + rng.uniform(-7e-4, 7e-4, 2)
        jump = max(jump, float(np.linalg.norm(cc_map_eval(S, x) - cc_map_eval(S, xp))))
    a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    lhs = cc_map_eval(S, a + b)
    rhs = cc_map_eval(S, a) + cc_map_eval(S, b)
    return [
        _holds("nearby points (distance <= 1e-3) with images 0.1 apart", ">= 0.1", jump, jump >= 0.1),
        _holds("additivity fails at (1,0) + (0,1)", "CC(a+b) != CC(a)+CC(b)",
               {"CC(a+b)": lhs.tolist(), "CC(a)+CC(b)": rhs.tolist()},
               np.linalg.norm(lhs - rhs) > 0.1),
        _close("CC at (1,0) is P_U2 (1,0)", [0.5, 0.5], cc_map_eval(S, a), 1e-12),
        _close("CC at a generic point is 0", [0.0, 0.0], cc_map_eval(S, np.array([1.0, 0.3])), 1e-12),
    ]


REGISTRY = {
    "line-cone": line_cone,
    "cone-ball": cone_ball,
    "two-balls": two_balls,
    "alpha-PU": alpha_pu,
    "comp-constants": comp_constants,
    "bam-pro": bam_pro,
    "not-linear-regular": not_linear_regular,
    "ccs1-ccs2": ccs1_ccs2,
    "t2t1": t2t1,
    "map-rate": map_rate_example,
    "symmetric-rate": symmetric_rate,
    "counterexam-discontinuity": counterexam_discontinuity,
}


def repro(example_id: str) -> ReproReport:
    if example_id not in REGISTRY:
        raise KeyError(example_id)
    return ReproReport(example_id, REGISTRY[example_id]())
