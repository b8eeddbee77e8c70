import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bamkit.sets import (AffineSubspace, Ball, LinearSubspace, Orthant, OrthantBall, Segment,
                         Singleton, TwoBallIntersection, friedrichs_cosine, intersect_affine)
from oracles import friedrichs_cosine_oracle, grid_projection, orthant_ball_projection

point2 = arrays(float, 2, elements=st.floats(-6, 6, allow_nan=False))


def _all_sets():
    return [
        Ball([0.5, -1.0], 1.5),
        Orthant(2),
        OrthantBall(2, 1.0),
        Segment([1.0, 0.0], [0.0, 1.0]),
        Singleton([3.0, -2.0]),
        LinearSubspace.span([1.0, 2.0]),
        AffineSubspace.line([0.0, 1.0], [1.0, -1.0]),
        TwoBallIntersection(Ball([-1.0, 0.0], 2.0), Ball([1.0, 0.0], 2.0)),
    ]


class TestProjections:
    def test_ball_example(self):
        np.testing.assert_allclose(Ball([0, 0], 1).project([2.0, 0.0]), [1.0, 0.0])

    def test_affine_line(self):
        U = AffineSubspace.line([0.0, 1.0], [1.0, -1.0])
        x = np.array([3.0, 0.5])
        expected = [(x[0] - x[1] + 1) / 2, (-x[0] + x[1] + 1) / 2]
        np.testing.assert_allclose(U.project(x), expected)

    def test_batch_matches_single(self, rng):
        X = rng.uniform(-4, 4, (20, 2))
        for C in _all_sets():
            np.testing.assert_allclose(C.project(X), np.array([C.project(x) for x in X]))

    @settings(max_examples=60, deadline=None)
    @given(point2, point2)
    def test_idempotent_nonexpansive_and_obtuse(self, x, y):
        for C in _all_sets():
            px, py = C.project(x), C.project(y)
            np.testing.assert_allclose(C.project(px), px, atol=1e-9)
            assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-9
            # variational inequality <x - Px, c - Px> <= 0 for c = Py in C
            assert np.dot(x - px, py - px) <= 1e-8 * (1 + np.linalg.norm(x) + np.linalg.norm(y))

    @settings(max_examples=40, deadline=None)
    @given(point2)
    def test_reflector_involution_on_affine(self, x):
        U = AffineSubspace.line([0.0, 1.0], [1.0, -1.0])
        np.testing.assert_allclose(U.reflect(U.reflect(x)), x, atol=1e-10)

    def test_orthant_ball_against_boundary_oracle(self, rng):
        C = OrthantBall(2, 1.0)
        for x in rng.uniform(-3, 3, (500, 2)):
            np.testing.assert_allclose(C.project(x), orthant_ball_projection(x), atol=1e-12)


class TestTwoBalls:
    def test_rejects_disjoint(self):
        with pytest.raises(ValueError):
            TwoBallIntersection(Ball([-3.0, 0.0], 1.0), Ball([3.0, 0.0], 1.0))

    def test_corner_projection(self):
        lens = TwoBallIntersection(Ball([-1.0, 0.0], 2.0), Ball([1.0, 0.0], 2.0))
        np.testing.assert_allclose(lens.project([0.0, 5.0]), [0.0, np.sqrt(3)], atol=1e-12)

    def test_against_grid_oracle(self, rng):
        lens = TwoBallIntersection(Ball([-1.0, 0.0], 2.0), Ball([1.0, 0.0], 2.0))

        def inside(P):
            return ((P[:, 0] + 1) ** 2 + P[:, 1] ** 2 <= 4) & ((P[:, 0] - 1) ** 2 + P[:, 1] ** 2 <= 4)

        for x in rng.uniform(-4, 4, (12, 2)):
            ref, h = grid_projection(x, inside, -2.0, 2.0)
            p = lens.project(x)
            assert lens.contains(p)
            # grid points along a curved rim sit off the boundary, so compare distances
            assert np.linalg.norm(x - p) <= np.linalg.norm(x - ref) + 1e-12
            assert np.linalg.norm(x - ref) - np.linalg.norm(x - p) <= 2 * h


class TestFriedrichs:
    def test_lines_at_45_degrees(self):
        r = friedrichs_cosine(LinearSubspace.span([1.0, 0.0]), LinearSubspace.span([1.0, 1.0]))
        assert abs(r.cosine - np.sqrt(2) / 2) <= 1e-10
        assert r.dim_intersection == 0

    def test_orthogonal_and_nested(self):
        e1, e2 = LinearSubspace.span([1.0, 0.0]), LinearSubspace.span([0.0, 1.0])
        assert friedrichs_cosine(e1, e2).cosine == 0.0
        assert friedrichs_cosine(e1, LinearSubspace.whole(2)).cosine == 0.0

    def test_affine_uses_parallel_subspace(self):
        U = AffineSubspace.line([0.0, 1.0], [1.0, -1.0])
        r = friedrichs_cosine(U, LinearSubspace.span([1.0, 0.0]))
        np.testing.assert_allclose(r.cosine, np.sqrt(2) / 2, atol=1e-12)

    @pytest.mark.parametrize("dims", [(2, 2), (3, 3), (4, 3), (1, 4)])
    def test_random_against_principal_angles(self, rng, dims):
        for _ in range(5):
            A, B = rng.standard_normal((5, dims[0])), rng.standard_normal((5, dims[1]))
            c = friedrichs_cosine(LinearSubspace(A), LinearSubspace(B)).cosine
            np.testing.assert_allclose(c, friedrichs_cosine_oracle(A, B), atol=1e-9)

    def test_symmetric_and_in_range(self, rng):
        for _ in range(20):
            U, V = LinearSubspace(rng.standard_normal((4, 2))), LinearSubspace(rng.standard_normal((4, 3)))
            a, b = friedrichs_cosine(U, V), friedrichs_cosine(V, U)
            np.testing.assert_allclose(a.cosine, b.cosine, atol=1e-12)
            assert 0.0 <= a.cosine < 1.0


class TestIntersectAffine:
    def test_line_meets_axis(self):
        U = AffineSubspace.line([0.0, 1.0], [1.0, -1.0])
        meet = intersect_affine(U, LinearSubspace.span([1.0, 0.0]))
        assert isinstance(meet, Singleton)
        np.testing.assert_allclose(meet.point, [1.0, 0.0], atol=1e-12)

    def test_parallel_lines_are_disjoint(self):
        A = AffineSubspace.line([0.0, 0.0], [1.0, 0.0])
        B = AffineSubspace.line([0.0, 1.0], [1.0, 0.0])
        assert intersect_affine(A, B) is None

    def test_planes_in_r3(self, rng):
        A = AffineSubspace(rng.standard_normal(3), LinearSubspace(rng.standard_normal((3, 2))))
        B = AffineSubspace(rng.standard_normal(3), LinearSubspace(rng.standard_normal((3, 2))))
        meet = intersect_affine(A, B)
        assert meet.rank == 1
        for s in (meet.anchor, meet.anchor + 3 * meet.par.basis[:, 0]):
            assert A.contains(s) and B.contains(s)

    def test_translate(self):
        U = LinearSubspace.span([1.0, 1.0]).translate([0.0, 2.0])
        assert U.contains(np.array([1.0, 3.0]))


class TestSubspaceIdentities:
    @settings(max_examples=40, deadline=None)
    @given(arrays(float, 4, elements=st.floats(-5, 5, allow_nan=False)))
    def test_complement_identity(self, x):
        M = LinearSubspace(np.array([[1.0, 0.0], [2.0, 1.0], [0.0, -1.0], [1.0, 3.0]]))
        np.testing.assert_allclose(M.project(x) + M.complement().project(x), x, atol=1e-10)

    def test_nested_commutation(self, rng):
        N = AffineSubspace(rng.standard_normal(4), LinearSubspace(rng.standard_normal((4, 3))))
        M = AffineSubspace(N.project(rng.standard_normal(4)),
                           LinearSubspace(N.par.basis @ rng.standard_normal((3, 1))))
        X = rng.uniform(-5, 5, (100, 4))
        meet = intersect_affine(M, N)
        np.testing.assert_allclose(M.project(N.project(X)), N.project(M.project(X)), atol=1e-9)
        np.testing.assert_allclose(M.project(N.project(X)), meet.project(X), atol=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(point2, point2)
    def test_translation_formula(self, x, z):
        for C in _all_sets():
            np.testing.assert_allclose(C.translate(z).project(x), z + C.project(x - z), atol=1e-10)
