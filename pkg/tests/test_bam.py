import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bamkit.bam import (BAMViolation, BamCertificate, Provenance, averaged_projector_certificate,
                        certify_empirical, combine2, combine2_constant, combineN_product, compose2,
                        compose2_constant, compose_chain, from_averaged_linear, from_contraction,
                        iterate, normal_matrix_bam, point_diagnostics, product_constant,
                        product_cosine, projector_certificate)
from bamkit.operators import (Averaged, Compose, ConvexCombo, LinearMap, Projector, SampleSpec,
                              conjugate_shift)
from bamkit.sets import AffineSubspace, Ball, LinearSubspace, friedrichs_cosine
from oracles import product_cosine_oracle, projector, spectral_norm

unit = st.floats(0.0, 0.999)


def _random_subspaces(rng, n, dims):
    return [LinearSubspace(rng.standard_normal((n, d))) for d in dims]


def _spec(n, seed=0, count=2000):
    return SampleSpec(seed=seed, count=count, center=tuple(np.zeros(n)), half_width=5.0)


class TestCertificate:
    def test_kappa(self):
        cert = BamCertificate(LinearSubspace.zero(2), 0.75, Provenance.EMPIRICAL)
        assert cert.kappa == pytest.approx(4.0)

    @pytest.mark.parametrize("gamma", [-0.1, 1.0, 1.5])
    def test_rejects_gamma_out_of_range(self, gamma):
        with pytest.raises(ValueError):
            BamCertificate(LinearSubspace.zero(2), gamma, Provenance.EMPIRICAL)


class TestConstants:
    def test_two_orthogonal_projectors(self):
        k = compose2_constant(0.0, 0.0, 0.0)
        assert k.r == pytest.approx(np.sqrt(0.5), abs=1e-15)
        assert k.s == pytest.approx(0.5, abs=1e-15)

    def test_projectors_give_map_constant(self):
        # with gamma = 0 the s constant reduces to (1 + c) / 2
        for c in (0.1, 0.5, 0.9):
            assert compose2_constant(0.0, 0.0, c).chosen == pytest.approx((1 + c) / 2, abs=1e-15)

    def test_combine_projectors(self):
        for a in (0.25, 0.5, 0.75):
            h = np.sqrt(0.5)
            expected = max(a * h + 1 - a, a + (1 - a) * h)
            assert combine2_constant(0.0, 0.0, 0.0, a) == pytest.approx(expected, abs=1e-15)

    def test_product_constant_with_projectors(self):
        assert product_constant([0.0, 0.0], 0.6) == pytest.approx(0.8, abs=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(unit, unit, st.floats(0.0, 0.999))
    def test_composition_range(self, g1, g2, c):
        k = compose2_constant(g1, g2, c)
        assert max(g1, g2) <= k.r + 1e-15 and k.r < 1.0
        assert max(g1, g2, 0.5) <= k.s + 1e-15 and k.s < 1.0
        assert max(g1, g2) <= k.chosen < 1.0

    @settings(max_examples=200, deadline=None)
    @given(unit, unit, st.floats(0.0, 0.999), st.floats(0.01, 0.99))
    def test_combination_range(self, g1, g2, c, a):
        v = combine2_constant(g1, g2, c, a)
        assert 0.0 <= v < 1.0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            compose2_constant(1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            combine2_constant(0.1, 0.1, 0.1, 1.0)


class TestProductCosine:
    @pytest.mark.parametrize("dims", [(3, 3, 4), (2, 4), (4, 4, 4, 3)])
    def test_against_block_oracle(self, rng, dims):
        Us = _random_subspaces(rng, 5, dims)
        w = rng.uniform(0.2, 1.0, len(dims))
        w /= w.sum()
        got = product_cosine(Us, w)
        np.testing.assert_allclose(got, product_cosine_oracle([U.basis for U in Us], w), atol=1e-10)


class TestTheoremRules:
    def test_compose2_lines(self):
        L1, L2 = LinearSubspace.span([1.0, 0.0]), LinearSubspace.span([1.0, 1.0])
        cert = compose2(projector_certificate(L1), projector_certificate(L2))
        assert cert.provenance is Provenance.COMPOSE2
        assert cert.gamma == pytest.approx((1 + np.sqrt(0.5)) / 2, abs=1e-12)
        assert cert.fixed_set.rank == 0

    def test_disjoint_fixed_sets(self):
        A = AffineSubspace.line([0.0, 0.0], [1.0, 0.0])
        B = AffineSubspace.line([0.0, 1.0], [1.0, 0.0])
        with pytest.raises(BAMViolation):
            compose2(projector_certificate(A), projector_certificate(B))

    def test_chain_fixed_set(self, rng):
        Us = _random_subspaces(rng, 5, (4, 4, 4))
        cert = compose_chain([projector_certificate(U) for U in Us])
        assert cert.fixed_set.rank == 2
        assert len(cert.details["steps"]) == 2

    def test_empirical_never_beats_theorem(self, rng):
        Us = _random_subspaces(rng, 4, (3, 3, 3))
        gammas = (0.2, 0.5, 0.0)
        certs = [averaged_projector_certificate(U, g) for U, g in zip(Us, gammas)]
        ops = [Averaged(Projector(U), g) for U, g in zip(Us, gammas)]
        w = np.array([0.5, 0.3, 0.2])
        built = [
            (Compose([ops[1], ops[0]]), compose2(certs[0], certs[1])),
            (Compose(list(reversed(ops))), compose_chain(certs)),
            (ConvexCombo([0.4, 0.6], ops[:2]), combine2(certs[0], certs[1], 0.4)),
            (ConvexCombo(w, ops), combineN_product(certs, w)),
        ]
        for op, cert in built:
            emp = certify_empirical(op, cert.fixed_set, _spec(4, seed=1))
            assert emp.gamma <= cert.gamma + 1e-6


class TestEmpirical:
    def test_averaged_projector_onto_ball(self):
        C = Ball([0.0, 0.0], 1.0)
        cert = certify_empirical(Averaged(Projector(C), 0.4), C, _spec(2))
        assert cert.gamma == pytest.approx(0.4, abs=1e-12)

    def test_violation_carries_witness(self):
        L = LinearSubspace.span([1.0, 0.0])
        with pytest.raises(BAMViolation) as info:
            certify_empirical(LinearMap(np.eye(2)), L, _spec(2))
        assert info.value.witness is not None

    def test_shift_invariance(self, rng):
        U = AffineSubspace([1.0, -2.0, 0.5], LinearSubspace(rng.standard_normal((3, 2))))
        V = AffineSubspace(U.project(rng.standard_normal(3)), LinearSubspace(rng.standard_normal((3, 2))))
        op = Compose([Projector(V), Projector(U)])
        F = compose2(projector_certificate(U), projector_certificate(V)).fixed_set
        z = np.array([0.3, 1.0, -2.0])
        spec = _spec(3, seed=2)
        # same samples relative to the fixed set: move the box by -z too
        moved = SampleSpec(seed=2, count=2000, center=tuple(-z), half_width=5.0)
        a = certify_empirical(op, F, spec).gamma
        b = certify_empirical(conjugate_shift(op, z), F.translate(-z), moved).gamma
        assert abs(a - b) <= 1e-9

    def test_regularity_and_strict_qne(self, rng):
        Us = _random_subspaces(rng, 4, (3, 3))
        op = Compose([Projector(Us[1]), Averaged(Projector(Us[0]), 0.3)])
        F = compose2(averaged_projector_certificate(Us[0], 0.3), projector_certificate(Us[1])).fixed_set
        cert = certify_empirical(op, F, _spec(4, seed=3))
        X = rng.uniform(-5, 5, (500, 4))
        GX, PX = op(X), F.project(X)
        d = np.linalg.norm(X - PX, axis=1)
        assert np.all(d <= cert.kappa * np.linalg.norm(X - GX, axis=1) + 1e-9)
        Y = F.project(rng.uniform(-5, 5, (500, 4)))
        lhs = np.sum((GX - Y) ** 2, axis=1) + (1 - cert.gamma ** 2) * d ** 2
        assert np.all(lhs <= np.sum((X - Y) ** 2, axis=1) + 1e-9)


class TestDirectCertificates:
    def test_contraction(self):
        b = np.array([1.0, -2.0])
        cert = from_contraction(LinearMap(0.5 * np.eye(2), offset=b), 0.5, _spec(2))
        np.testing.assert_allclose(cert.fixed_set.point, 2 * b, atol=1e-10)

    def test_contraction_modulus_too_small(self):
        with pytest.raises(BAMViolation):
            from_contraction(LinearMap(0.9 * np.eye(2)), 0.5, _spec(2))

    def test_averaged_linear(self, rng):
        P = projector(rng.standard_normal((4, 2)))
        Q = projector(rng.standard_normal((4, 1)))
        # identity on range(P), a nonsymmetric contraction elsewhere
        A = P + 0.3 * (np.eye(4) - P) @ (np.eye(4) + Q) @ (np.eye(4) - P)
        cert = from_averaged_linear(A)
        # fixed space of A is range(P); oracle norm through numpy SVD
        np.testing.assert_allclose(cert.fixed_set.projection_matrix, P, atol=1e-9)
        np.testing.assert_allclose(cert.gamma, spectral_norm(A @ (np.eye(4) - P)), atol=1e-12)

    def test_rotation_is_not_averaged(self):
        with pytest.raises(BAMViolation):
            from_averaged_linear(np.array([[0.0, -1.0], [1.0, 0.0]]))

    def test_normal_matrix(self):
        cert = normal_matrix_bam(np.diag([1.0, 0.5, -0.25]))
        assert cert.gamma == pytest.approx(0.5)
        np.testing.assert_allclose(cert.fixed_set.projection_matrix, np.diag([1.0, 0.0, 0.0]), atol=1e-12)

    @pytest.mark.parametrize("A", [np.array([[0.0, -1.0], [1.0, 0.0]]), np.diag([1.0, -1.0]),
                                   np.diag([1.2, 0.5]), np.array([[1.0, 1.0], [0.0, 1.0]])])
    def test_normal_matrix_rejects(self, A):
        with pytest.raises(BAMViolation):
            normal_matrix_bam(A)


class TestIteration:
    def test_rate_law_for_theorem_certificates(self, rng):
        Us = _random_subspaces(rng, 5, (4, 4, 3))
        certs = [projector_certificate(U) for U in Us]
        cases = [(Compose([Projector(U) for U in reversed(Us)]), compose_chain(certs)),
                 (ConvexCombo([0.2, 0.3, 0.5], [Projector(U) for U in Us]),
                  combineN_product(certs, [0.2, 0.3, 0.5]))]
        for op, cert in cases:
            for _ in range(10):
                tr = iterate(op, cert, rng.uniform(-5, 5, 5), 30)
                assert tr.rate_law_holds()

    def test_errors_nonincreasing_for_quasinonexpansive(self, rng):
        C = Ball([0.0, 0.0], 1.0)
        tr = iterate(Averaged(Projector(C), 0.7), averaged_projector_certificate(C, 0.7), [4.0, 3.0], 20)
        assert np.all(np.diff(tr.errors) <= 1e-15)
        np.testing.assert_allclose(tr.errors, 4.0 * 0.7 ** np.arange(21), rtol=1e-12)

    def test_trace_shapes(self):
        C = Ball([0.0, 0.0], 1.0)
        tr = iterate(Projector(C), projector_certificate(C), [2.0, 0.0], 3)
        assert tr.iterates.shape == (4, 2)
        np.testing.assert_allclose(tr.errors, [1.0, 0.0, 0.0, 0.0])


class TestPointDiagnostics:
    def test_bounds(self, rng):
        for _ in range(10):
            U1, U2 = _random_subspaces(rng, 4, (3, 3))
            G1 = Averaged(Projector(U1), rng.uniform(0, 0.9))
            c = friedrichs_cosine(U1, U2).cosine
            for x in rng.uniform(-5, 5, (50, 4)):
                pd = point_diagnostics(G1, U1, U2, x)
                assert 0.0 <= pd.beta1 <= 1.0 + 1e-12 and 0.0 <= pd.beta2 <= 1.0 + 1e-12
                assert min(pd.beta1, pd.beta2) <= np.sqrt((1 + c) / 2) + 1e-9
                assert pd.bound == pytest.approx(np.sqrt((1 + c) / 2))
