"""
Tests for services/geodesic_bvp.py: shooting, direct method and the
length/energy equivalence.
"""

import math

import numpy as np
import pytest

from core.convex_norms import random_strictly_convex_norm
from core.exceptions import NotStrictlyConvexError, ShootingConvergenceError, ValidationError
from core.heisenberg import group_point, multiply
from core.pontryagin import integrate_extremal, make_multiplier
from models.data_models import DirectProblem, GroupPoint, Multiplier, ShootingMode, ShootingProblem
from services.geodesic_bvp import (
    VERTICAL_HINT, GeodesicBVPService, control_cost, control_curve, control_endpoint, direction_angles,
    equivalence_check, sphere_direction
)


@pytest.fixture
def service():
    return GeodesicBVPService(shooting_settings={'random_starts': 4})


@pytest.fixture
def circle_target(euclidean):
    """End point of a unit-speed Euclidean extremal that is still minimizing"""
    return integrate_extremal(euclidean, Multiplier([0.6, 0.8], 0.3), 2.5, 1024).curve.end


class TestHelpers:

    def test_angles_invert_directions(self):
        u = np.array([0.5, -1.0, 2.0, 0.25])
        back = sphere_direction(direction_angles(u))[0]
        assert np.allclose(back, u / np.linalg.norm(u))

    def test_planar_direction(self):
        assert np.allclose(sphere_direction([[math.pi / 2.0]]), [[0.0, 1.0]])

    def test_control_endpoint_matches_lift(self, rng):
        controls = rng.standard_normal((16, 2))
        end = control_endpoint(controls, 2.0)
        curve = control_curve(controls, 2.0)
        assert np.allclose(end.as_vector(), curve.end.as_vector())
        assert curve.horizontality_residual <= 1e-12

    def test_control_cost(self, euclidean):
        controls = np.array([[1.0, 0.0], [0.0, 2.0]])
        assert control_cost(euclidean, controls, 2.0) == pytest.approx(0.5 * 1.0 + 0.5 * 4.0)


class TestEquivalence:

    def test_constant_speed_is_equality(self, euclidean):
        theta = np.linspace(0.0, 3.0, 50)
        controls = 1.5 * np.column_stack([np.cos(theta), np.sin(theta)])
        report = equivalence_check(euclidean, controls, 2.0)
        assert report.equal
        assert report.length == pytest.approx(3.0)
        assert report.energy == pytest.approx(4.5)

    def test_varying_speed_is_strict(self, euclidean):
        controls = np.array([[1.0, 0.0], [3.0, 0.0]])
        report = equivalence_check(euclidean, controls, 2.0)
        assert not report.equal
        assert report.gap == pytest.approx(2.0 * 10.0 - 16.0)

    def test_sampled_controls(self, euclidean):
        trace = integrate_extremal(euclidean, Multiplier([1.0, 0.0], 0.5), 2.0, 256)
        assert equivalence_check(euclidean, trace.v_samples, 2.0, trace.s_grid).equal

    def test_rejects_nonpositive_horizon(self, euclidean):
        with pytest.raises(ValidationError):
            equivalence_check(euclidean, np.ones((3, 2)), 0.0)


class TestShootingProblem:

    def test_identity_target_rejected(self, euclidean):
        with pytest.raises(ValidationError):
            ShootingProblem(euclidean, GroupPoint([0.0, 0.0], 0.0))

    def test_fixed_time_needs_horizon(self, euclidean):
        with pytest.raises(ValidationError):
            ShootingProblem(euclidean, group_point([1, 0, 0]), ShootingMode.FIXED_T)


class TestShooting:

    def test_reaches_circle_target(self, euclidean, circle_target, service):
        result = service.shoot(ShootingProblem(euclidean, circle_target))
        assert result.residual <= 1e-8
        assert result.group_residual <= 1e-4
        assert result.T == pytest.approx(2.5, abs=1e-6)
        assert result.multiplier.k == pytest.approx(0.3, abs=1e-6)
        assert np.allclose(result.multiplier.lambda_init, [0.6, 0.8], atol=1e-6)
        assert result.cost == pytest.approx(1.25, rel=1e-6)

    def test_horizontal_target_is_a_segment(self, euclidean, service):
        result = service.shoot(ShootingProblem(euclidean, group_point([1.0, 0.0, 0.0])))
        assert result.residual <= 1e-8
        assert abs(result.multiplier.k) <= 1e-6
        assert result.T == pytest.approx(1.0, abs=1e-8)

    def test_fixed_time_rescales_speed(self, euclidean, circle_target, service):
        problem = ShootingProblem(euclidean, circle_target, ShootingMode.FIXED_T, T=1.25)
        result = service.shoot(problem)
        assert result.T == 1.25
        assert result.multiplier.R == pytest.approx(2.0, rel=1e-6)
        assert result.multiplier.k == pytest.approx(0.6, rel=1e-5)
        assert result.residual <= 1e-8

    def test_initial_guess_seed_is_used(self, euclidean, circle_target, service):
        guess = Multiplier([0.6, 0.8], 0.29)
        result = service.shoot(ShootingProblem(euclidean, circle_target, init_guess=guess, init_T=2.4))
        assert result.residual <= 1e-8
        assert result.T == pytest.approx(2.5, abs=1e-6)

    def test_result_serializes(self, euclidean, circle_target, service):
        data = service.shoot(ShootingProblem(euclidean, circle_target)).to_dict()
        assert set(data) >= {'multiplier', 'T', 'residual', 'group_residual', 'cost', 'trace', 'alternatives'}
        assert data['multiplier']['lambda0'] == 1

    def test_flat_norm_rejected(self, l1_norm, service):
        with pytest.raises(NotStrictlyConvexError):
            service.shoot(ShootingProblem(l1_norm, group_point([1.0, 0.0, 0.0])))

    def test_failure_on_vertical_target_carries_hint(self, euclidean, service, mocker):
        mocker.patch.object(GeodesicBVPService, '_run_seeds', return_value=[])
        with pytest.raises(ShootingConvergenceError) as info:
            service.shoot(ShootingProblem(euclidean, group_point([0.0, 0.0, 1.0])))
        assert VERTICAL_HINT in str(info.value)
        assert info.value.residual == math.inf


class TestDirectMethod:

    def test_problem_validation(self, euclidean):
        with pytest.raises(ValidationError):
            DirectProblem(euclidean, group_point([1, 0, 0]), 1.0, M=3)
        with pytest.raises(ValidationError):
            DirectProblem(euclidean, group_point([1, 0, 0]), 1.0, penalty=[10.0, 10.0])

    def test_initial_controls_shape(self, euclidean, service):
        problem = DirectProblem(euclidean, group_point([1.0, 0.5, 2.0]), 2.0, M=32)
        assert service.initial_controls(problem).shape == (32, 2)

    def test_rejects_wrong_initial_shape(self, euclidean, service):
        problem = DirectProblem(euclidean, group_point([1.0, 0.5, 2.0]), 2.0, M=32)
        with pytest.raises(ValidationError):
            service.solve_direct(problem, np.zeros((16, 2)))

    def test_segment_cost(self, euclidean, service):
        solution = service.solve_direct(DirectProblem(euclidean, group_point([1.0, 0.0, 0.0]), 1.0, M=16))
        assert solution.endpoint_residual <= 1e-6
        assert solution.cost == pytest.approx(0.5, rel=1e-4)
        assert solution.length == pytest.approx(1.0, rel=1e-4)

    @pytest.mark.slow
    def test_agrees_with_shooting(self, euclidean, circle_target, service):
        result = service.shoot(ShootingProblem(euclidean, circle_target))
        check = service.direct_cross_check(euclidean, circle_target, result, M=256)
        assert check['endpoint_residual'] <= 1e-6
        assert -1e-3 <= check['relative_gap'] <= 1e-2


class TestVerticalAndClosedFormTargets:

    @pytest.mark.parametrize("height", [4.0 * math.pi, -math.pi])
    def test_vertical_target_is_a_full_circle(self, euclidean, service, height):
        result = service.shoot(ShootingProblem(euclidean, group_point([0.0, 0.0, height])))
        radius = math.sqrt(abs(height) / (4.0 * math.pi))
        assert result.residual <= 1e-8
        assert result.T == pytest.approx(math.sqrt(math.pi * abs(height)), rel=1e-6)
        assert abs(result.multiplier.k) == pytest.approx(1.0 / (4.0 * radius), rel=1e-6)
        z = result.trace.curve.z
        assert np.max(np.linalg.norm(z, axis=1)) == pytest.approx(2.0 * radius, rel=1e-4)

    @pytest.mark.slow
    def test_example52_end_point_recovers_the_multiplier(self, example52, service):
        from services.glp_lab import EXAMPLE52_MULTIPLIER, TAU
        target = integrate_extremal(example52, EXAMPLE52_MULTIPLIER, TAU, 1024).curve.end
        assert np.allclose(target.z, [-1.0, -(1.0 + math.sqrt(2.0))], atol=1e-3)
        result = service.shoot(ShootingProblem(example52, target))
        assert result.residual <= 1e-8
        assert result.multiplier.k == pytest.approx(-0.25, abs=1e-6)
        assert result.T == pytest.approx(TAU, rel=1e-6)
        # lambda(0) may sit anywhere on the flat part {(ell, 1)} of the dual sphere
        assert result.multiplier.lambda_init[1] == pytest.approx(1.0, abs=1e-6)


class TestMetricProperties:

    def test_triangle_inequality(self, euclidean, service, rng):
        def distance(g):
            return service.shoot(ShootingProblem(euclidean, g)).T

        for _ in range(3):
            g = group_point([*rng.standard_normal(2), rng.uniform(-0.5, 0.5)])
            h = group_point([*rng.standard_normal(2), rng.uniform(-0.5, 0.5)])
            assert distance(multiply(g, h)) <= distance(g) + distance(h) + 1e-8

    def test_direct_cost_decreases_under_refinement(self, euclidean, circle_target, service):
        costs, controls = [], None
        for M in (16, 32, 64):
            initial = None if controls is None else np.repeat(controls, 2, axis=0)
            solution = service.solve_direct(DirectProblem(euclidean, circle_target, 2.5, M=M), initial)
            assert solution.endpoint_residual <= 1e-6
            costs.append(solution.cost)
            controls = solution.controls
        assert costs[1] <= costs[0] + 1e-7
        assert costs[2] <= costs[1] + 1e-7

    def test_max_norm_minimizers_are_not_unique(self, max_norm, service):
        target = group_point([2.0, 0.0, 0.0])
        straight = np.tile([-1.0, 0.0], (16, 1))
        wiggle = np.column_stack([-np.ones(16), 0.5 * np.tile([1.0, -1.0, -1.0, 1.0], 4)])
        for controls in (straight, wiggle):
            assert np.allclose(control_endpoint(controls, 2.0).as_vector(), target.as_vector(), atol=1e-12)
            assert control_cost(max_norm, controls, 2.0) == pytest.approx(1.0)

        problem = DirectProblem(max_norm, target, 2.0, M=16)
        first = service.solve_direct(problem, straight)
        second = service.solve_direct(problem, wiggle)
        for solution in (first, second):
            assert solution.endpoint_residual <= 1e-5
            assert solution.cost == pytest.approx(1.0, rel=1e-3)
        assert np.max(np.abs(first.controls - second.controls)) >= 0.25


@pytest.mark.slow
def test_shooting_and_direct_agree_on_random_norms(rng, service):
    for _ in range(10):
        norm = random_strictly_convex_norm(rng)
        k = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 0.5))
        target = integrate_extremal(norm, make_multiplier(norm, rng.standard_normal(2), k), 1.0, 1024).curve.end
        result = service.shoot(ShootingProblem(norm, target))
        assert result.residual <= 1e-8
        check = service.direct_cross_check(norm, target, result, M=256)
        assert abs(check['relative_gap']) <= 1e-2
