"""
Tests for core/pontryagin.py: extremal flow, verification report and
the example52 multiplier family.
"""

import math

import numpy as np
import pytest

from core.convex_norms import LinearImageNorm, PNorm, make_example52, random_strictly_convex_norm
from core.exceptions import (
    ConstantCurveError, DualGradientUndefinedError, MultiplierError, NotStrictlyConvexError, ValidationError
)
from core.heisenberg import horizontal_lift, line_deviation
from core.pontryagin import (
    convergence_order, dual_gradient_with_fallback, integrate_endpoints, integrate_extremal,
    integrate_extremal_batch, make_multiplier, multiplier_family_check_example52,
    reparametrize_unit_speed, trace_from_curve, verify_extremal
)
from models.data_models import Multiplier, dict_to_extremal_trace


class TestMultipliers:

    def test_make_multiplier_scales_onto_dual_sphere(self, euclidean):
        m = make_multiplier(euclidean, [3.0, 4.0], 0.0, 2.0)
        assert np.allclose(m.lambda_init, [1.2, 1.6])
        m.validate(euclidean)

    def test_zero_direction(self, euclidean):
        with pytest.raises(ValidationError):
            make_multiplier(euclidean, [0.0, 0.0], 1.0)

    def test_off_sphere_multiplier(self, euclidean):
        with pytest.raises(MultiplierError):
            integrate_extremal(euclidean, Multiplier([2.0, 0.0], 0.0), 1.0, 16)

    def test_abnormal_multiplier(self, euclidean):
        with pytest.raises(MultiplierError):
            Multiplier([1.0, 0.0], 0.0, lambda0=0).validate(euclidean)

    def test_trivial_multiplier(self):
        with pytest.raises(MultiplierError):
            Multiplier([0.0, 0.0], 0.0, lambda0=0)

    def test_nonpositive_speed(self):
        with pytest.raises(MultiplierError):
            Multiplier([1.0, 0.0], 0.0, R=0.0)


class TestIntegration:

    def test_k_zero_gives_a_line(self, euclidean):
        trace = integrate_extremal(euclidean, Multiplier([0.6, 0.8], 0.0), 3.0, 64)
        assert np.allclose(trace.curve.end.z, [-1.8, -2.4])
        assert np.allclose(trace.curve.t, 0.0, atol=1e-14)
        assert line_deviation(trace.curve) <= 1e-12

    @pytest.mark.parametrize("k", [0.25, -0.5])
    def test_euclidean_extremals_are_circles(self, euclidean, k):
        radius = 1.0 / (4.0 * abs(k))
        period = 2.0 * math.pi * radius
        trace = integrate_extremal(euclidean, Multiplier([1.0, 0.0], k), period, 4096)
        z = trace.curve.z
        assert np.linalg.norm(z[-1]) <= 1e-8
        assert np.max(np.linalg.norm(z, axis=1)) == pytest.approx(2.0 * radius, rel=1e-6)
        assert abs(trace.curve.t[-1]) == pytest.approx(4.0 * math.pi * radius ** 2, rel=1e-6)
        assert trace.curve.horizontality_residual <= 1e-6 * trace.curve.diameter()

    def test_diagnostics_stay_small(self):
        norm = LinearImageNorm(PNorm(2, 2.0), [[2.0, 0.0], [0.5, 1.0]])
        trace = integrate_extremal(norm, make_multiplier(norm, [0.3, -1.0], 0.5), 4.0, 4096)
        assert trace.diagnostics.worst() <= 1e-6
        assert trace.diagnostics.hamiltonian_constant == pytest.approx(-0.5, abs=1e-6)

    def test_speed_scales_with_r(self, euclidean):
        trace = integrate_extremal(euclidean, make_multiplier(euclidean, [1.0, 1.0], 0.3, 2.0), 1.0, 256)
        assert np.allclose(euclidean.evaluate(trace.v_samples), 2.0, atol=1e-9)

    def test_example52_matches_closed_form(self, example52):
        from services.glp_lab import EXAMPLE52_MULTIPLIER, TAU, example52_closed_form
        trace = integrate_extremal(example52, EXAMPLE52_MULTIPLIER, TAU, 4096)
        reference, _, _ = example52_closed_form(trace.s_grid)
        error = np.column_stack([trace.curve.z - reference.z, trace.curve.t - reference.t])
        assert np.max(np.linalg.norm(error, axis=1)) <= 1e-5

    def test_rejects_flat_norms(self, l1_norm, hexagon):
        for norm in (l1_norm, hexagon):
            with pytest.raises(NotStrictlyConvexError):
                integrate_extremal(norm, Multiplier([1.0, 0.0], 0.5), 1.0, 16)

    def test_rejects_nonpositive_horizon(self, euclidean):
        with pytest.raises(ValidationError):
            integrate_extremal(euclidean, Multiplier([1.0, 0.0], 0.5), 0.0, 16)

    def test_batch_matches_single_runs(self, euclidean):
        multipliers = [Multiplier([1.0, 0.0], 0.5), Multiplier([0.0, -1.0], -1.0), Multiplier([0.6, 0.8], 0.0)]
        batch = integrate_extremal_batch(euclidean, multipliers, 2.0, 128)
        for m, trace in zip(multipliers, batch):
            single = integrate_extremal(euclidean, m, 2.0, 128)
            assert np.allclose(trace.curve.z, single.curve.z, atol=1e-12)
            assert np.allclose(trace.curve.t, single.curve.t, atol=1e-12)
        assert integrate_extremal_batch(euclidean, [], 1.0) == []

    def test_endpoints_with_per_row_horizons(self, euclidean):
        lam = np.array([[1.0, 0.0], [0.0, 1.0]])
        ends = integrate_endpoints(euclidean, lam, np.array([0.5, 0.25]), 1.0, np.array([1.0, 2.0]), 128)
        for row, (direction, k, T) in enumerate(zip(lam, (0.5, 0.25), (1.0, 2.0))):
            trace = integrate_extremal(euclidean, Multiplier(direction, k), T, 128)
            assert np.allclose(ends[row], trace.curve.end.as_vector(), atol=1e-12)

    def test_fourth_order_convergence(self, euclidean):
        report = convergence_order(euclidean, Multiplier([1.0, 0.0], 0.25), 2.0, 16, halvings=2)
        assert report['steps'] == [16, 32, 64]
        assert 10.0 <= report['ratios'][0] <= 22.0

    @pytest.mark.slow
    def test_k_zero_lines_for_random_norms(self, rng):
        for _ in range(50):
            norm = random_strictly_convex_norm(rng)
            m = make_multiplier(norm, rng.standard_normal(2), 0.0)
            trace = integrate_extremal(norm, m, float(rng.uniform(1.0, 10.0)), 256)
            assert line_deviation(trace.curve) <= 1e-10

    @pytest.mark.slow
    def test_random_k_circles_fit(self, euclidean, rng):
        for _ in range(20):
            k = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2.0))
            radius = 1.0 / (4.0 * abs(k))
            m = make_multiplier(euclidean, rng.standard_normal(2), k)
            z = integrate_extremal(euclidean, m, 2.0 * math.pi * radius, 2048).curve.z
            A = np.column_stack([2.0 * z, np.ones(len(z))])
            (cx, cy, c), *_ = np.linalg.lstsq(A, np.sum(z * z, axis=1), rcond=None)
            fitted = math.sqrt(c + cx * cx + cy * cy)
            residual = np.max(np.abs(np.linalg.norm(z - [cx, cy], axis=1) - fitted))
            assert residual <= 1e-6
            assert fitted == pytest.approx(radius, rel=1e-6)


class TestDualGradientFallback:

    def test_fills_example52_diagonal(self, example52):
        grad = dual_gradient_with_fallback(example52, np.array([[1.0, 1.0], [0.2, 1.0]]))
        assert np.allclose(grad, [[0.0, 1.0], [0.0, 1.0]], atol=1e-6)

    def test_refuses_polygon_ridge(self, hexagon):
        ridge = np.array([math.cos(math.pi / 6.0), math.sin(math.pi / 6.0)])
        with pytest.raises(DualGradientUndefinedError):
            dual_gradient_with_fallback(hexagon, ridge)


class TestVerification:

    def test_integrated_extremal_passes(self, euclidean):
        trace = integrate_extremal(euclidean, Multiplier([0.0, 1.0], -0.5), 3.0, 2048)
        report = verify_extremal(euclidean, trace)
        assert report.passed, report.failed()
        assert set(report.checks) == {'minimization', 'costate_linearity', 'speed_and_dual', 'hamiltonian'}
        assert report.hamiltonian_matches_minus_half_r2
        assert report.control_selection_dev <= 1e-6

    def test_wrong_multiplier_fails(self, euclidean):
        s = np.linspace(0.0, 1.0, 101)
        segment = horizontal_lift(np.column_stack([np.zeros_like(s), -s]), 0.0, s)
        good = verify_extremal(euclidean, trace_from_curve(euclidean, segment, Multiplier([0.0, 1.0], 0.0)), 1e-8)
        bad = verify_extremal(euclidean, trace_from_curve(euclidean, segment, Multiplier([0.0, 1.0], 0.25)), 1e-8)
        assert good.passed
        assert not bad.passed
        assert 'speed_and_dual' in bad.failed()

    def test_wrong_speed_fails_only_the_speed_check(self, euclidean):
        s = np.linspace(0.0, 1.0, 101)
        segment = horizontal_lift(np.column_stack([np.zeros_like(s), -2.0 * s]), 0.0, s)
        report = verify_extremal(euclidean, trace_from_curve(euclidean, segment, Multiplier([0.0, 2.0], 0.0)), 1e-8)
        assert report.failed() == ['speed_and_dual']
        assert report.checks['speed_and_dual'].worst_value == pytest.approx(3.0)

    def test_report_serializes(self, euclidean):
        trace = integrate_extremal(euclidean, Multiplier([1.0, 0.0], 0.25), 1.0, 64)
        data = verify_extremal(euclidean, trace).to_dict()
        assert data['status'] == 'pass'
        assert data['checks']['hamiltonian']['status'] == 'pass'

    def test_trace_without_multiplier_is_fitted(self, euclidean):
        trace = integrate_extremal(euclidean, Multiplier([1.0, 0.0], 0.25), 2.0, 512)
        data = trace.to_dict()
        data['multiplier'] = None
        report = verify_extremal(euclidean, dict_to_extremal_trace(data))
        assert report.passed, report.failed()

    def test_needs_three_samples(self, euclidean):
        trace = integrate_extremal(euclidean, Multiplier([1.0, 0.0], 0.25), 1.0, 1)
        with pytest.raises(ValidationError):
            verify_extremal(euclidean, trace)


class TestExample52Family:

    @pytest.mark.parametrize("ell,k,expected", [
        (0.0, 0.0, True), (0.5, 0.25, True), (-1.0, -0.5, True), (1.0, 0.0, True),
        (0.9, -0.1, False), (0.0, 0.3, False), (1.2, 0.3, False),
    ])
    def test_admissibility(self, ell, k, expected):
        assert multiplier_family_check_example52(ell, k) is expected

    def test_admissible_multiplier_verifies_segment(self, example52):
        s = np.linspace(0.0, 1.0, 101)
        segment = horizontal_lift(np.column_stack([np.zeros_like(s), -s]), 0.0, s)
        report = verify_extremal(example52, trace_from_curve(example52, segment, Multiplier([0.5, 1.0], 0.25)), 1e-8)
        assert report.passed, report.failed()


class TestReparametrization:

    def test_unit_speed(self, euclidean):
        s = np.linspace(0.0, 1.0, 201)
        curve = horizontal_lift(np.column_stack([s * s, np.zeros_like(s)]), 0.0, s)
        unit = reparametrize_unit_speed(euclidean, curve)
        assert unit.s_grid[-1] == pytest.approx(1.0)
        assert np.allclose(unit.z[:, 0], unit.s_grid, atol=1e-12)

    def test_constant_curve(self, euclidean):
        s = np.linspace(0.0, 1.0, 5)
        curve = horizontal_lift(np.ones((5, 2)), 0.0, s)
        with pytest.raises(ConstantCurveError):
            reparametrize_unit_speed(euclidean, curve)


def test_example52_norm_factory_is_strictly_convex():
    assert make_example52().flags.strictly_convex
