"""
Tests for services/isoperimetrix.py
"""

import math

import numpy as np
import pytest

from core.convex_norms import PNorm
from core.exceptions import AdmissibleRangeError, DimensionMismatchError, NotStrictlyConvexError, ValidationError
from core.pontryagin import integrate_extremal
from core.task_runner import run_trials
from models.data_models import GroupPoint, Multiplier
from services.isoperimetrix import (
    IsoperimetrixService, bipolar_error, geodesic_from_isoperimetrix, hausdorff_distance,
    isoperimetrix_curve, isoperimetrix_initial_guesses, polar_body, tangent_turning
)


@pytest.fixture
def service():
    return IsoperimetrixService()


class TestPolarBody:

    def test_euclidean_polar_is_the_circle(self, euclidean):
        body = polar_body(euclidean, 256)
        assert np.allclose(np.linalg.norm(body.boundary, axis=1), 1.0)
        assert body.is_convex()
        assert body.is_symmetric()

    def test_l1_polar_is_the_square(self, l1_norm, service):
        boundary = service.polar_boundary(l1_norm, 256)
        assert np.allclose(np.max(np.abs(boundary), axis=1), 1.0)
        for corner in ([1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]):
            assert np.min(np.linalg.norm(boundary - corner, axis=1)) <= 1e-12

    def test_boundary_is_counterclockwise(self, example52, service):
        boundary = service.polar_boundary(example52, 512)
        angles = np.mod(np.arctan2(boundary[:, 1], boundary[:, 0]), 2.0 * np.pi)
        assert np.all(np.diff(angles) > 0)
        assert service.polar_body(example52, 512).is_convex()

    def test_support_function_is_the_norm(self, example52):
        body = polar_body(example52, 1024)
        d = np.array([0.3, 0.8])
        assert body.support(d) == pytest.approx(float(example52.evaluate(d)))
        assert float(np.max(body.boundary @ d)) == pytest.approx(float(example52.evaluate(d)), rel=1e-4)

    def test_isoperimetrix_is_turned_polar(self, example52, service):
        polar = service.polar_boundary(example52, 512)
        iso = isoperimetrix_curve(example52, 512)
        assert np.allclose(iso.boundary, np.column_stack([-polar[:, 1], polar[:, 0]]))
        assert iso.is_convex()

    def test_boundary_cache_is_bounded(self, euclidean, example52):
        service = IsoperimetrixService({'cache_size': 2})
        first = service.polar_boundary(euclidean, 64)
        assert service.polar_boundary(euclidean, 64) is first
        service.polar_boundary(example52, 64)
        service.polar_boundary(euclidean, 128)
        assert len(service._boundary_cache) == 2
        assert service.polar_boundary(euclidean, 64) is not first

    def test_boundary_cache_under_parallel_trials(self, example52):
        service = IsoperimetrixService({'cache_size': 4})
        results = run_trials({i: (lambda r=64 + 8 * (i % 6): service.polar_boundary(example52, r)) for i in range(24)},
                             max_workers=4)
        assert len(service._boundary_cache) == 4
        for key, boundary in results:
            assert np.array_equal(boundary, service.polar_boundary(example52, 64 + 8 * (key % 6)))

    @pytest.mark.parametrize("p", [1.0, 2.0, 'inf'])
    def test_bipolar_recovers_polyhedral_and_round_balls(self, p):
        assert bipolar_error(PNorm(2, p), 1024) <= 1e-9

    def test_bipolar_error_example52(self, example52):
        assert bipolar_error(example52, 1024) <= 1e-3

    def test_rejects_higher_dimensions(self, service):
        with pytest.raises(DimensionMismatchError):
            service.polar_boundary(PNorm(4, 2.0))

    def test_rejects_tiny_resolution(self, euclidean, service):
        with pytest.raises(ValidationError):
            service.polar_boundary(euclidean, 2)


class TestIsoperimetrixGeodesics:

    def test_euclidean_geodesic_matches_integration(self, euclidean):
        curve = geodesic_from_isoperimetrix(euclidean, 0.25, [1.0, 0.0], arc=(0.0, 3.0), samples=3000)
        trace = integrate_extremal(euclidean, Multiplier([1.0, 0.0], 0.25), 3.0, 3000)
        assert np.allclose(curve.s_grid, trace.s_grid)
        assert np.max(np.abs(curve.z - trace.curve.z)) <= 1e-5
        assert np.max(np.abs(curve.t - trace.curve.t)) <= 1e-4

    def test_example52_geodesic_matches_closed_form(self, example52):
        from services.glp_lab import TAU, example52_closed_form
        curve = geodesic_from_isoperimetrix(example52, -0.25, [0.0, 1.0], arc=(0.0, TAU), samples=2048)
        reference, _, _ = example52_closed_form(curve.s_grid)
        assert np.max(np.abs(curve.z - reference.z)) <= 1e-4
        assert np.max(np.abs(curve.t - reference.t)) <= 1e-4

    def test_subarc_starts_inside_the_curve(self, euclidean, service):
        full = service.geodesic_from_isoperimetrix(euclidean, 0.5, [0.0, 1.0], arc=(0.0, 2.0), samples=400)
        tail = service.geodesic_from_isoperimetrix(euclidean, 0.5, [0.0, 1.0], arc=(1.0, 2.0), samples=200)
        assert tail.s_grid[0] == pytest.approx(1.0)
        assert np.allclose(tail.z[-1], full.z[-1], atol=1e-9)
        assert tail.t[-1] == pytest.approx(full.t[-1], abs=1e-6)

    def test_long_arcs_wrap_around(self, euclidean):
        period = 2.0 * math.pi
        curve = geodesic_from_isoperimetrix(euclidean, 0.25, [1.0, 0.0], arc=(0.0, 2.0 * period), samples=2000)
        assert np.linalg.norm(curve.z[-1]) <= 1e-5
        assert curve.t[-1] == pytest.approx(2.0 * curve.t[1000], rel=1e-4)

    def test_k_zero_rejected(self, euclidean):
        with pytest.raises(ValidationError):
            geodesic_from_isoperimetrix(euclidean, 0.0, [1.0, 0.0])

    def test_flat_norm_rejected(self, hexagon):
        with pytest.raises(NotStrictlyConvexError):
            geodesic_from_isoperimetrix(hexagon, 1.0, [1.0, 0.0])

    def test_bad_arc(self, euclidean):
        with pytest.raises(AdmissibleRangeError):
            geodesic_from_isoperimetrix(euclidean, 1.0, [1.0, 0.0], arc=(1.0, 0.5))


class TestInitialGuesses:

    def test_seed_close_to_the_true_multiplier(self, euclidean):
        target = integrate_extremal(euclidean, Multiplier([1.0, 0.0], 0.25), 2.0, 512).curve.end
        guesses = isoperimetrix_initial_guesses(euclidean, target)
        assert 0 < len(guesses) <= 4
        assert any(abs(m.k - 0.25) <= 1e-2 and abs(T - 2.0) <= 5e-2 for m, T in guesses)

    def test_vertical_target(self, euclidean, service):
        target = GroupPoint([0.0, 0.0], 1.0)
        m, T = service.initial_guesses(euclidean, target)[0]
        endpoint = service.arc_endpoint(euclidean, m.k, m.lambda_init, T)
        assert np.linalg.norm(endpoint.z) <= 1e-4
        assert endpoint.t == pytest.approx(1.0, abs=1e-3)


class TestCurveMetrics:

    def test_hausdorff_distance(self):
        points = np.column_stack([np.linspace(0.0, 1.0, 11), np.zeros(11)])
        assert hausdorff_distance(points, points) == 0.0
        assert hausdorff_distance(points, points + [0.0, 0.1]) == pytest.approx(0.1)

    def test_turning_of_a_regular_polygon(self):
        theta = 2.0 * np.pi * np.arange(360) / 360
        report = tangent_turning(np.column_stack([np.cos(theta), np.sin(theta)]))
        assert report['max_turning'] == pytest.approx(2.0 * np.pi / 360)
        assert report['total_turning'] == pytest.approx(2.0 * np.pi)
        assert report['is_c1']

    def test_square_has_corners(self):
        square = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
        report = tangent_turning(square)
        assert report['max_turning'] == pytest.approx(np.pi / 2)
        assert not report['is_c1']
        assert tangent_turning(square, corner_angle=2.0)['is_c1']
