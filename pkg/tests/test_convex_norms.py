"""
Tests for core/convex_norms.py
"""

import math

import numpy as np
import pytest

from core.convex_norms import (
    FunctionNorm, LinearImageNorm, PNorm, PolygonNorm, SquaredNormFunctional, dual_eval_generic,
    fenchel_residual, legendre_of_squared, legendre_sup, make_example52, make_pnorm, make_polygon,
    norm_from_descriptor, random_strictly_convex_norm, regular_polygon_vertices, check_smoothness,
    check_strict_convexity, subdiff_of_squared
)
from core.exceptions import DimensionMismatchError, ValidationError

COVECTORS = np.array([[1.0, 0.0], [0.0, 1.0], [0.3, -0.7], [-2.0, 1.5], [1.0, 1.0], [0.6, -0.2]])


class TestEvaluation:

    @pytest.mark.parametrize("p,expected", [(1.0, 7.0), (2.0, 5.0), ('inf', 4.0)])
    def test_pnorm_values(self, p, expected):
        assert float(PNorm(2, p).evaluate(np.array([3.0, -4.0]))) == pytest.approx(expected)

    def test_example52_values(self, example52):
        assert float(example52.evaluate(np.array([0.0, 1.0]))) == pytest.approx(1.0)
        assert float(example52.evaluate(np.array([1.0, 0.0]))) == pytest.approx(1.0 + math.sqrt(2.0))

    def test_batched_evaluation(self, euclidean):
        values = euclidean.evaluate(np.ones((3, 4, 2)))
        assert values.shape == (3, 4)
        assert np.allclose(values, math.sqrt(2.0))

    def test_dimension_mismatch(self, euclidean):
        with pytest.raises(DimensionMismatchError):
            euclidean.evaluate(np.ones(4))

    def test_odd_dimension_rejected(self):
        with pytest.raises(ValidationError):
            PNorm(3, 2.0)

    @pytest.mark.parametrize("p", [0.5, 'two', True])
    def test_invalid_exponent(self, p):
        with pytest.raises(ValidationError):
            PNorm(2, p)

    def test_make_pnorm_dimension(self):
        assert make_pnorm(3, 2.0).dim == 6

    def test_hexagon_unit_sphere(self, hexagon):
        vertices = regular_polygon_vertices(6)
        assert np.allclose(hexagon.evaluate(vertices), 1.0)
        midpoint = 0.5 * (vertices[0] + vertices[1])
        assert float(hexagon.evaluate(midpoint)) == pytest.approx(1.0)

    def test_polygon_needs_interior(self):
        with pytest.raises(ValidationError):
            PolygonNorm([[1.0, 0.0], [2.0, 0.0]])


class TestDualNorms:

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, 'inf'])
    def test_pnorm_dual_matches_sampling(self, p):
        norm = PNorm(2, p)
        closed = norm.dual_evaluate(COVECTORS)
        generic = dual_eval_generic(norm, COVECTORS)
        assert np.allclose(closed, generic, rtol=0.0, atol=1e-8)

    def test_example52_dual_matches_sampling(self, example52):
        closed = example52.dual_evaluate(COVECTORS)
        generic = dual_eval_generic(example52, COVECTORS)
        assert np.allclose(closed, generic, rtol=0.0, atol=1e-8)

    def test_example52_dual_closed_form(self, example52):
        assert float(example52.dual_evaluate(np.array([0.0, 1.0]))) == pytest.approx(1.0)
        assert float(example52.dual_evaluate(np.array([1.0, 0.0]))) == pytest.approx(math.sqrt(2.0) - 1.0)

    def test_hexagon_dual_matches_sampling(self, hexagon):
        assert np.allclose(hexagon.dual_evaluate(COVECTORS), dual_eval_generic(hexagon, COVECTORS), atol=1e-8)

    def test_linear_image_dual(self, rng):
        norm = random_strictly_convex_norm(rng)
        assert np.allclose(norm.dual_evaluate(COVECTORS), dual_eval_generic(norm, COVECTORS), atol=1e-8)

    def test_higher_dimensional_dual(self):
        norm = PNorm(4, 3.0)
        p = np.array([0.5, -1.0, 0.25, 2.0])
        assert dual_eval_generic(norm, p) == pytest.approx(float(norm.dual_evaluate(p)), rel=1e-6)

    def test_dual_gradient_euclidean(self, euclidean):
        assert np.allclose(euclidean.dual_gradient(np.array([3.0, 4.0])), [0.6, 0.8])

    def test_dual_gradient_undefined_on_example52_diagonal(self, example52):
        grad = example52.dual_gradient(np.array([[1.0, 1.0], [2.0, 1.0]]))
        assert np.all(np.isnan(grad[0]))
        assert np.all(np.isfinite(grad[1]))

    def test_dual_gradient_lies_on_unit_sphere(self, strictly_convex_norms):
        p = np.array([0.4, 0.9])
        for norm in strictly_convex_norms:
            grad = norm.dual_gradient(p)
            assert float(norm.evaluate(grad)) == pytest.approx(1.0, abs=1e-9)
            assert float(grad @ p) == pytest.approx(float(norm.dual_evaluate(p)), abs=1e-9)


class TestSubdifferentials:

    def test_smooth_point_is_singleton(self, euclidean):
        sub = euclidean.subdifferential(np.array([3.0, 4.0]))
        assert sub.is_singleton
        assert np.allclose(sub.witnesses[0], [0.6, 0.8])

    def test_example52_kink(self, example52):
        sub = example52.subdifferential(np.array([0.0, 2.0]))
        assert sub.exact
        assert np.allclose(sorted(sub.witnesses[:, 0]), [-1.0, 1.0])
        assert np.allclose(sub.witnesses[:, 1], 1.0)
        directions = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        assert sub.contains(np.array([0.5, 1.0]), directions)
        assert not sub.contains(np.array([1.5, 1.0]), directions)

    def test_l1_on_axis(self, l1_norm):
        sub = l1_norm.subdifferential(np.array([2.0, 0.0]))
        assert sorted(map(tuple, sub.witnesses)) == [(1.0, -1.0), (1.0, 1.0)]

    def test_support_values_and_width(self, l1_norm):
        sub = l1_norm.subdifferential(np.array([2.0, 0.0]))
        directions = np.array([[0.0, 1.0], [0.0, -1.0], [1.0, 0.0], [-1.0, 0.0]])
        assert np.allclose(sub.support_values(directions), [1.0, 1.0, 1.0, -1.0])
        assert sub.width(directions) == pytest.approx(2.0)

    def test_max_norm_on_diagonal(self, max_norm):
        sub = max_norm.subdifferential(np.array([1.0, -1.0]))
        assert sorted(map(tuple, sub.witnesses)) == [(0.0, -1.0), (1.0, 0.0)]

    def test_origin_is_dual_ball(self, euclidean):
        sub = euclidean.subdifferential(np.zeros(2))
        assert sub.support(np.array([0.0, 1.0])) == pytest.approx(1.0)

    def test_numerical_subdifferential_of_function_norm(self):
        norm = FunctionNorm(lambda z: abs(z[0]) + abs(z[1]))
        sub = norm.subdifferential(np.array([1.0, 0.0]))
        assert not sub.is_singleton
        assert sub.support(np.array([0.0, 1.0])) == pytest.approx(1.0, abs=1e-5)

    def test_subgradient_at_kink_is_midpoint(self, example52):
        assert np.allclose(example52.subgradient(np.array([0.0, -3.0])), [0.0, -1.0])


class TestLegendre:

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_fenchel_equality_on_graph(self, p):
        norm = PNorm(2, p)
        z = np.array([0.7, -1.3])
        a = float(norm.evaluate(z)) * norm.gradient(z)
        assert fenchel_residual(norm, z, a) <= 1e-8

    def test_fenchel_equality_example52(self, example52):
        z = np.array([0.4, 0.9])
        a = float(example52.evaluate(z)) * example52.gradient(z)
        assert fenchel_residual(example52, z, a) <= 1e-8
        assert fenchel_residual(example52, z, a + np.array([0.5, 0.0])) > 1e-4

    def test_squared_subdifferential_scales(self, euclidean):
        sub = subdiff_of_squared(euclidean, np.array([3.0, 4.0]))
        assert np.allclose(sub.witnesses[0], [3.0, 4.0])
        assert np.allclose(subdiff_of_squared(euclidean, np.zeros(2)).witnesses, 0.0)

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0, 'inf'])
    def test_conjugate_matches_supremum(self, p):
        norm = PNorm(2, p)
        for covector in COVECTORS:
            assert legendre_sup(norm, covector) == pytest.approx(float(legendre_of_squared(norm, covector)), rel=1e-5)

    def test_functional_wrapper(self, example52):
        functional = SquaredNormFunctional(example52)
        z = np.array([0.0, 1.0])
        assert float(functional.evaluate(z)) == pytest.approx(0.5)
        assert float(functional.conjugate(np.array([0.0, 1.0]))) == pytest.approx(0.5)
        assert functional.fenchel_residual(z, np.array([0.3, 1.0])) <= 1e-12


class TestConvexityChecks:

    def test_l1_is_not_strictly_convex(self, l1_norm, rng):
        ok, witness = check_strict_convexity(l1_norm, rng=rng)
        assert not ok
        p, q = witness
        assert float(l1_norm.evaluate(0.5 * (p + q))) == pytest.approx(1.0)

    def test_hexagon_is_not_strictly_convex(self, hexagon, rng):
        assert not check_strict_convexity(hexagon, rng=rng).ok

    def test_strictly_convex_norms_pass(self, strictly_convex_norms, rng):
        for norm in strictly_convex_norms:
            assert check_strict_convexity(norm, rng=rng).ok, norm

    def test_higher_dimensional_check(self, rng):
        assert check_strict_convexity(PNorm(4, 2.0), rng=rng).ok
        assert not check_strict_convexity(PNorm(4, 1.0), rng=rng).ok

    def test_check_needs_trials(self, euclidean):
        with pytest.raises(ValidationError):
            check_strict_convexity(euclidean, trials=0)

    def test_smoothness(self, euclidean, example52, max_norm, rng):
        assert check_smoothness(euclidean, rng=rng).ok
        assert not check_smoothness(example52, rng=rng).ok
        assert not check_smoothness(max_norm, rng=rng).ok

    def test_function_norm_measures_flags(self):
        strict = FunctionNorm(lambda z: math.hypot(z[0], 2.0 * z[1]))
        flat = FunctionNorm(lambda z: max(abs(z[0]), abs(z[1])))
        assert strict.flags.strictly_convex and strict.flags.measured
        assert not flat.flags.strictly_convex

    def test_function_norm_must_be_symmetric(self):
        with pytest.raises(ValidationError):
            FunctionNorm(lambda z: abs(z[0]) + abs(z[1]) + 0.5 * z[0])


class TestDescriptors:

    @pytest.mark.parametrize("descriptor", [
        {'family': 'pnorm', 'p': 2.5},
        {'family': 'pnorm', 'p': 'inf', 'dim': 4},
        {'family': 'example52'},
        {'family': 'polygon', 'vertices': [[1.0, 0.0], [0.5, 1.0], [-0.5, 1.0]]},
        {'family': 'linear', 'base': {'family': 'pnorm', 'p': 3.0}, 'matrix': [[2.0, 0.0], [1.0, 1.0]]},
    ])
    def test_descriptor_rebuilds_norm(self, descriptor):
        norm = norm_from_descriptor(descriptor)
        rebuilt = norm_from_descriptor(norm.descriptor())
        z = np.linspace(-1.0, 1.0, norm.dim)
        assert float(rebuilt.evaluate(z)) == pytest.approx(float(norm.evaluate(z)))

    def test_polygon_family(self):
        norm = norm_from_descriptor({'family': 'polygon', 'vertices': regular_polygon_vertices(6).tolist()})
        assert isinstance(norm, PolygonNorm)
        hexagon = make_polygon(regular_polygon_vertices(6))
        z = np.array([0.3, -0.8])
        assert float(norm.evaluate(z)) == pytest.approx(float(hexagon.evaluate(z)))
        assert np.allclose(hexagon.evaluate(regular_polygon_vertices(6)), 1.0)

    def test_json_text_is_accepted(self):
        assert isinstance(norm_from_descriptor('{"family": "pnorm", "p": 2}'), PNorm)

    def test_linear_family(self):
        norm = norm_from_descriptor({'family': 'linear', 'base': {'family': 'pnorm', 'p': 2},
                                     'matrix': [[2.0, 0.0], [0.0, 1.0]]})
        assert isinstance(norm, LinearImageNorm)
        assert float(norm.evaluate(np.array([1.0, 0.0]))) == pytest.approx(2.0)

    @pytest.mark.parametrize("descriptor,field", [
        ({'family': 'pnorm', 'p': 2, 'q': 2}, 'q'),
        ({'family': 'example52', 'p': 2}, 'p'),
        ({'family': 'pnorm'}, 'p'),
        ({'family': 'ellipse'}, 'family'),
        ({'p': 2}, 'family'),
        ({'family': 'linear', 'base': {'family': 'pnorm', 'p': 2}, 'matrix': [[1.0, 1.0], [1.0, 1.0]]}, 'matrix'),
    ])
    def test_strict_rejection(self, descriptor, field):
        with pytest.raises(ValidationError) as info:
            norm_from_descriptor(descriptor)
        assert info.value.field == field

    def test_invalid_json(self):
        with pytest.raises(ValidationError):
            norm_from_descriptor('{"family": ')
