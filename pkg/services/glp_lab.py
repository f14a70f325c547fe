"""
Linearity experiments for sub-Finsler Heisenberg groups

Executable checks around the statement "every infinite geodesic is a line iff
N is strictly convex": blow-down sequences, explicit projection bounds for
extremals with k != 0, randomised trials, face-monotone counterexamples for
norms with flat faces, and the golden example52 extremal.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect, minimize, minimize_scalar

from config import config
from core.convex_norms import (
    make_example52, sample_directions, check_strict_convexity, subdiff_of_squared
)
from core.exceptions import (
    AdmissibleRangeError, LineInputError, NotStrictlyConvexError, TraceTooShortError, ValidationError
)
from core.heisenberg import horizontal_lift, horizontal_projection, line_deviation
from core.pontryagin import (
    default_steps, integrate_extremal, multiplier_family_check_example52, make_multiplier,
    trace_from_curve, trace_from_samples, verify_extremal
)
from core.task_runner import run_trials
from models.data_models import (
    BlowDownReport, BoundednessCertificate, CounterexampleResult, DirectProblem, ExtremalTrace,
    GLPReport, GLPTrial, Multiplier, SampledCurve, lift_heights
)
from models.norm_interfaces import NormOracle
from services.geodesic_bvp import GeodesicBVPService

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
TAU = 2.0 + math.pi / SQRT2
THETA_TAU = 1.0 + SQRT2


# ----------------------------------------------------------------------
# example52
# ----------------------------------------------------------------------

def _example52_implicit(theta: float) -> float:
    """s(theta) on the second branch; increasing from s(1) = 1 to s(1 + sqrt 2) = tau"""
    radicand = max(2.0 + 4.0 * theta - 2.0 * theta * theta, 0.0)
    return SQRT2 * math.asin(min((theta - 1.0) / SQRT2, 1.0)) - 0.5 * math.sqrt(radicand) + 2.0


def example52_theta(s: float) -> float:
    """theta(s): equal to s on [0, 1], the bisection root of the implicit relation on [1, tau]"""
    s = float(s)
    if s < 0 or s > TAU * (1.0 + 1e-14):
        raise AdmissibleRangeError(f"theta is defined on [0, {TAU!r}], got {s!r}", field='s')
    if s <= 1.0:
        return s
    if s >= TAU:
        return THETA_TAU
    return bisect(lambda theta: _example52_implicit(theta) - s, 1.0, THETA_TAU, xtol=1e-15, rtol=4e-16, maxiter=200)


def _example52_rhs(theta: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(2.0 + 4.0 * theta - 2.0 * theta * theta, 0.0)) / (1.0 + theta)


def example52_closed_form(s_grid: Sequence[float], supersample: int = 16) -> Tuple[SampledCurve, np.ndarray, np.ndarray]:
    """Curve, controls v and costate a of the example52 extremal on a grid inside [0, tau].

    lambda(0) = (0, 1), k = -1/4, so a = (-y, 1 + x). Heights come from the lift
    of a supersampled copy of the projection.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.ndim != 1 or s_grid.size < 2 or np.any(np.diff(s_grid) <= 0):
        raise ValidationError("s_grid must be strictly increasing with at least 2 points", field='s_grid')

    def planar(s: np.ndarray):
        theta = np.array([example52_theta(value) for value in s])
        second = s > 1.0
        w = np.sqrt(np.maximum((1.0 + 2.0 * theta - theta * theta) / 2.0, 0.0))
        z = np.column_stack([np.where(second, w - 1.0, 0.0), -theta])
        v = np.column_stack([
            np.where(second, (theta - 1.0) / (1.0 + theta), 0.0),
            np.where(second, _example52_rhs(theta), 1.0)
        ])
        return z, v

    z, v = planar(s_grid)
    fine = np.union1d(s_grid, np.linspace(s_grid[0], s_grid[-1], supersample * s_grid.size + 1))
    z_fine, _ = planar(fine)
    t = np.interp(s_grid, fine, lift_heights(z_fine - z_fine[0], 0.0))
    a = np.column_stack([-z[:, 1], 1.0 + z[:, 0]])
    return SampledCurve(s_grid, z, t), v, a


EXAMPLE52_MULTIPLIER = Multiplier(np.array([0.0, 1.0]), -0.25, 1.0)


def multiplier_family_sweep(grid: int = 10, tol: float = 1e-8) -> Dict[str, Any]:
    """Pontryagin checks for (ell, 1, k) against the segment (0, -s, 0) on [0, 1].

    Admissible pairs satisfy max(|ell|, |ell - 4k|) <= 1 and must pass every
    check; pairs with max(|ell|, |ell - 4k|) >= 1.05 must fail at least one.
    """
    norm = make_example52()
    s = np.linspace(0.0, 1.0, 101)
    segment = horizontal_lift(np.column_stack([np.zeros_like(s), -s]), 0.0, s)
    ells = np.linspace(-1.0, 1.0, grid)
    admissible, violating = [], []
    for ell in ells:
        # k ranges over the values keeping ell - 4k inside [-1, 1]
        for k in np.linspace((ell - 1.0) / 4.0, (ell + 1.0) / 4.0, grid):
            admissible.append((float(ell), float(k)))
    for ell in ells:
        for j, overshoot in enumerate(np.linspace(1.05, 2.0, grid)):
            # ell - 4k lands at +-overshoot, outside the dual unit ball
            k = (ell - overshoot * (-1.0) ** j) / 4.0
            violating.append((float(ell), float(k)))

    def passes(ell: float, k: float) -> bool:
        trace = trace_from_curve(norm, segment, Multiplier(np.array([ell, 1.0]), k))
        return verify_extremal(norm, trace, tol).passed

    admissible_pass = sum(passes(ell, k) for ell, k in admissible)
    violating_fail = sum(not passes(ell, k) for ell, k in violating)
    predicted = sum(multiplier_family_check_example52(ell, k) for ell, k in admissible)
    return {
        'admissible': len(admissible),
        'admissible_passed': admissible_pass,
        'admissible_predicted': predicted,
        'violating': len(violating),
        'violating_failed': violating_fail,
        'passed': admissible_pass == len(admissible) == predicted and violating_fail == len(violating)
    }


def _check(value: float, tolerance: float) -> Dict[str, Any]:
    return {'value': value, 'tolerance': tolerance, 'passed': bool(value <= tolerance)}


def verify_example52(steps: int = 4096, samples: int = 2049) -> Dict[str, Any]:
    """Golden example52 report; never raises for failed checks"""
    norm = make_example52()
    checks: Dict[str, Dict[str, Any]] = {}
    theta_one = example52_theta(1.0)
    theta_tau = example52_theta(TAU)
    theta_two = example52_theta(2.0)
    checks['theta_at_1'] = _check(abs(theta_one - 1.0), 0.0)
    checks['theta_at_tau'] = _check(abs(theta_tau - THETA_TAU), 1e-10)
    checks['theta_at_2'] = _check(abs(_example52_implicit(theta_two) - 2.0), 1e-12)

    s_ode = np.linspace(1.01, TAU - 0.01, 200)
    h = 1e-6
    derivative = np.array([(example52_theta(s + h) - example52_theta(s - h)) / (2.0 * h) for s in s_ode])
    theta_ode = np.array([example52_theta(s) for s in s_ode])
    checks['cauchy_residual'] = _check(float(np.max(np.abs(derivative - _example52_rhs(theta_ode)))), 1e-6)

    s_grid = np.linspace(0.0, TAU, samples)
    curve, v, a = example52_closed_form(s_grid)
    checks['closed_form_speed'] = _check(float(np.max(np.abs(norm.evaluate(v) - 1.0))), 1e-12)
    checks['closed_form_dual'] = _check(float(np.max(np.abs(norm.dual_evaluate(a) - 1.0))), 1e-12)
    report = verify_extremal(norm, trace_from_samples(norm, curve, a, v, EXAMPLE52_MULTIPLIER))
    checks['closed_form_extremal'] = {'value': float(max(c.worst_value for c in report.checks.values())),
                                      'tolerance': config.integrator_config['verify_tolerance'],
                                      'passed': report.passed}

    trace = integrate_extremal(norm, EXAMPLE52_MULTIPLIER, TAU, steps)
    reference, _, _ = example52_closed_form(trace.s_grid)
    error = np.max(np.linalg.norm(np.column_stack([trace.curve.z - reference.z, trace.curve.t - reference.t]), axis=1))
    checks['integrator_agreement'] = _check(float(error), 1e-5)
    checks['integrator_speed'] = _check(trace.diagnostics.speed_dev, 1e-6)
    checks['integrator_dual'] = _check(trace.diagnostics.dual_dev, 1e-6)

    family = multiplier_family_sweep()
    checks['multiplier_family'] = {'value': family['admissible_passed'] + family['violating_failed'],
                                   'tolerance': family['admissible'] + family['violating'],
                                   'passed': family['passed']}
    passed = all(check['passed'] for check in checks.values())
    logger.info("[GLP] example52 verification %s", 'passed' if passed else 'failed: ' + ', '.join(
        name for name, check in checks.items() if not check['passed']))
    return {
        'tau': TAU,
        'theta_tau': theta_tau,
        'theta_2': theta_two,
        'length': float(np.sum(norm.evaluate(np.diff(trace.curve.z, axis=0)))),
        'checks': checks,
        'multiplier_family': family,
        'status': 'pass' if passed else 'fail'
    }


# ----------------------------------------------------------------------
# blow-downs and projection bounds
# ----------------------------------------------------------------------

def _extend(norm: Optional[NormOracle], trace: ExtremalTrace, horizon: float) -> ExtremalTrace:
    if trace.T >= horizon * (1.0 - 1e-12):
        return trace
    if norm is None or trace.multiplier is None:
        raise TraceTooShortError(f"trace covers [0, {trace.T:.6g}] but [0, {horizon:.6g}] is needed "
                                 "and there is no norm and multiplier to re-integrate")
    steps_per_unit = trace.s_grid.size / max(trace.T, 1e-300)
    logger.debug("[GLP] re-integrating trace to horizon %.6g", horizon)
    return integrate_extremal(norm, trace.multiplier, horizon, max(16, int(math.ceil(steps_per_unit * horizon))))


def _sample(trace: ExtremalTrace, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    grid = trace.s_grid
    planar = horizontal_projection(trace.curve)
    z = np.column_stack([np.interp(s, grid, planar[:, j]) for j in range(planar.shape[1])])
    return z, np.interp(s, grid, trace.curve.t)


def blow_down(trace: ExtremalTrace, k_list: Optional[Sequence[int]] = None,
              norm: Optional[NormOracle] = None, samples: Optional[int] = None) -> BlowDownReport:
    """gamma_k(s) = delta_{1/k} gamma(s k) on [0, 1] for each k.

    Records sup |(gamma_k)_I| and, as geodesic proxy, the spread of
    (N-length of a subarc) - R (parameter gap), measured on the trace polyline.
    """
    settings = config.glp_config
    k_list = [int(k) for k in (k_list or settings['blow_down_scales'])]
    if not k_list or any(k < 1 for k in k_list):
        raise ValidationError("blow-down scales must be positive integers", field='k_list')
    samples = samples or settings['blow_down_samples']
    trace = _extend(norm, trace, float(max(k_list)))
    # without a norm the geodesic proxy is not measured
    chords = None if norm is None else norm.evaluate(np.diff(trace.curve.z, axis=0))
    if trace.multiplier is not None:
        R = trace.multiplier.R
    else:
        R = float(np.median(norm.evaluate(trace.v_samples))) if norm is not None else math.nan
    sups, residuals = [], []
    s = np.linspace(0.0, 1.0, samples)
    for k in k_list:
        z, _ = _sample(trace, s * k)
        sups.append(float(np.max(np.linalg.norm(z / k, axis=1))))
        if chords is None:
            residuals.append(float('nan'))
            continue
        inside = trace.s_grid <= k * (1.0 + 1e-12)
        arclength = np.concatenate([[0.0], np.cumsum(chords)])[inside]
        excess = arclength - R * trace.s_grid[inside]
        residuals.append(float((np.max(excess) - np.min(excess)) / k))
    rate = None
    if len(k_list) >= 2 and all(value > 0 for value in sups):
        rate = float(np.polyfit(np.log(k_list), np.log(sups), 1)[0])
    logger.debug("[GLP] blow-down sups %s, collapse rate %s", sups, rate)
    return BlowDownReport(k_list, sups, residuals, rate)


def dual_sphere_radius(norm: NormOracle) -> float:
    """max |p| over N*(p) = 1, by coarse sampling plus Brent refinement in 2D"""
    settings = config.convex_config
    if norm.dim == 2:
        count = settings['dual_coarse_samples']
        theta = 2.0 * np.pi * np.arange(count) / count
        radius = 1.0 / np.asarray(norm.dual_evaluate(np.column_stack([np.cos(theta), np.sin(theta)])))
        best = int(np.argmax(radius))
        step = 2.0 * np.pi / count

        def negative(angle):
            return -1.0 / float(norm.dual_evaluate(np.array([math.cos(angle), math.sin(angle)])))

        refined = minimize_scalar(negative, bounds=(theta[best] - step, theta[best] + step), method='bounded',
                                  options={'xatol': settings['dual_refine_xatol']})
        return float(max(radius[best], -refined.fun))
    directions = sample_directions(norm.dim)
    radius = 1.0 / np.asarray(norm.dual_evaluate(directions))
    start = directions[int(np.argmax(radius))]
    refined = minimize(lambda u: float(norm.dual_evaluate(u / np.linalg.norm(u))), start, method='Nelder-Mead',
                       options={'xatol': 1e-12, 'fatol': 1e-15})
    return float(max(np.max(radius), 1.0 / refined.fun))


def boundedness_certificate(norm: NormOracle, trace: ExtremalTrace) -> BoundednessCertificate:
    """Explicit bound C on sup |gamma_I| for an extremal with k != 0.

    With c the distance between dF_N(v(s0)) and dF_N(v(0)), the costate
    identity |a(s0) - a(0)| = 4|k| |gamma_I(s0)| gives |k| >= k_lower =
    c / (4 |gamma_I(s0)|); since a stays on the dual sphere of radius R,
    |gamma_I(s)| <= D / (4 |k|) <= D / (4 k_lower) with D its diameter.
    """
    if not norm.flags.strictly_convex:
        raise NotStrictlyConvexError(f"{norm!r} is not strictly convex; no certificate exists")
    v = trace.v_samples
    drift = np.linalg.norm(v - v[0], axis=1)
    if np.max(drift) <= 1e-9 * max(1.0, float(np.linalg.norm(v[0]))):
        raise LineInputError("line input: controls are constant, the trace is a straight line")
    i = int(np.argmax(drift))
    start = subdiff_of_squared(norm, v[0])
    later = subdiff_of_squared(norm, v[i])
    along = np.mean(later.witnesses, axis=0) - np.mean(start.witnesses, axis=0)
    directions = sample_directions(norm.dim)
    if np.linalg.norm(along) > 0:
        directions = np.vstack([directions, along / np.linalg.norm(along)])
    c = start.distance(later, directions)
    reach = float(np.linalg.norm(trace.curve.z[i] - trace.curve.z[0]))
    if not (c > 0 and reach > 0):
        raise LineInputError(f"subdifferential gap {c:.3e} gives no certificate")
    R = trace.multiplier.R if trace.multiplier is not None else float(np.median(norm.evaluate(v)))
    k_lower = c / (4.0 * reach)
    diameter = 2.0 * R * dual_sphere_radius(norm) * (1.0 + 1e-9)
    return BoundednessCertificate(s0=float(trace.s_grid[i]), c=float(c), k_lower=float(k_lower),
                                  C=float(diameter / (4.0 * k_lower)), dual_diameter=float(diameter))


def projection_period(trace: ExtremalTrace) -> Optional[float]:
    """First return of a(s) to a(0), refined by a parabola through the closest samples"""
    distance = np.linalg.norm(trace.a_samples - trace.a_samples[0], axis=1)
    far = np.flatnonzero(distance > 0.5 * np.max(distance))
    if np.max(distance) <= 0 or far.size == 0:
        return None
    leave = far[0]
    back = np.flatnonzero(distance[leave:] <= 0.5 * np.max(distance))
    if back.size == 0:
        return None
    first_back = leave + back[0]
    again = np.flatnonzero(distance[first_back:] > 0.5 * np.max(distance))
    stop = first_back + again[0] if again.size else distance.size
    j = first_back + int(np.argmin(distance[first_back:stop]))
    if j == 0 or j >= distance.size - 1:
        return None
    s = trace.s_grid
    y = distance[j - 1:j + 2] ** 2
    denom = y[0] - 2.0 * y[1] + y[2]
    offset = 0.5 * (y[0] - y[2]) / denom if denom > 0 else 0.0
    return float(s[j] + offset * (s[j + 1] - s[j]))


class GLPLabService:
    """Randomised linearity trials and flat-face counterexamples"""

    def __init__(self, settings: Optional[Dict[str, Any]] = None):
        self.settings = dict(config.glp_config, **(settings or {}))

    def _trial_multipliers(self, norm: NormOracle, trials: int, rng: np.random.Generator) -> List[Multiplier]:
        lines = int(round(self.settings.get('line_fraction', 0.25) * trials))
        low, high = self.settings.get('k_range', (0.1, 2.0))
        multipliers = []
        for i in range(trials):
            direction = rng.standard_normal(norm.dim)
            k = 0.0 if i < lines else float(rng.choice([-1.0, 1.0]) * rng.uniform(low, high))
            multipliers.append(make_multiplier(norm, direction, k, 1.0))
        return multipliers

    def _run_trial(self, norm: NormOracle, index: int, m: Multiplier, horizon: float, steps: int) -> GLPTrial:
        trace = integrate_extremal(norm, m, horizon, steps)
        observed = float(np.max(np.linalg.norm(horizontal_projection(trace.curve), axis=1)))
        if m.k == 0:
            return GLPTrial(index, m, None, observed, line_deviation(trace.curve), None)
        try:
            certificate = boundedness_certificate(norm, trace)
        except LineInputError as e:
            logger.warning("[GLP] trial %d: %s", index, e)
            return GLPTrial(index, m, None, observed, None, False, projection_period(trace))
        # round norms make the bound tight, so allow the integrator's own error
        slack = 1.0 + config.integrator_config['verify_tolerance']
        return GLPTrial(index, m, certificate.C, observed, None, bool(observed <= certificate.C * slack),
                        projection_period(trace))

    def glp_empirical(self, norm: NormOracle, trials: int = 20, horizon: float = 50.0,
                      seed: Optional[int] = None) -> GLPReport:
        """Random multipliers: k = 0 must give lines, k != 0 projections stay under the certificate"""
        if trials < 1:
            raise ValidationError("at least one trial is required", field='trials')
        if not horizon > 0:
            raise ValidationError("horizon must be positive", field='horizon')
        if not norm.flags.strictly_convex:
            raise NotStrictlyConvexError(f"{norm!r} is not strictly convex; use nonconvex_counterexample")
        seed = config.seed if seed is None else seed
        rng = np.random.default_rng(seed)
        steps = default_steps(horizon, self.settings.get('steps_per_unit'))
        multipliers = self._trial_multipliers(norm, trials, rng)
        tasks = {i: (lambda i=i, m=m: self._run_trial(norm, i, m, horizon, steps)) for i, m in enumerate(multipliers)}
        results = []
        for i, outcome in run_trials(tasks, return_exceptions=True):
            if isinstance(outcome, Exception):
                logger.warning("[GLP] trial %d failed: %s", i, outcome)
                m = multipliers[i]
                outcome = GLPTrial(i, m, None, float('nan'), None, False if m.k != 0 else None)
            results.append(outcome)
        report = GLPReport(norm=norm.descriptor(), horizon=horizon, seed=seed, trials=results)
        logger.info("[GLP] %d trials over horizon %.6g: %s", trials, horizon, 'pass' if report.passed else 'fail')
        return report

    # ------------------------------------------------------------------
    # counterexamples
    # ------------------------------------------------------------------

    @staticmethod
    def _last_true(predicate, lo: float, hi: float, iterations: int = 60) -> float:
        """Bisection for the switch point of a predicate that is true at lo and false past it"""
        if predicate(hi):
            return hi
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if predicate(mid) else (lo, mid)
        return lo

    @staticmethod
    def _is_flat(norm: NormOracle, p: np.ndarray, q: np.ndarray) -> bool:
        return bool(float(norm.evaluate(0.5 * (p + q))) >= 1.0 - 1e-12)

    def find_flat_face(self, norm: NormOracle, rng: Optional[np.random.Generator] = None
                       ) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Two points spanning a flat piece of the unit sphere, or None when the check finds none.

        In 2D the witness is widened by bisection along the sphere to the
        ends of its face, then pulled in by a relative 1e-9.
        """
        check = check_strict_convexity(norm, rng=rng)
        if check.ok:
            return None
        p, q = (norm.unit_sphere_point(w) for w in check.witness)
        if norm.dim != 2:
            return (p, q) if self._is_flat(norm, p, q) else None

        def point(angle: float) -> np.ndarray:
            return norm.unit_sphere_point(np.array([math.cos(angle), math.sin(angle)]))

        a = math.atan2(p[1], p[0])
        b = math.atan2(q[1], q[0])
        span = (b - a + math.pi) % (2.0 * math.pi) - math.pi
        if not self._is_flat(norm, p, q):
            # keep the part of the witness arc that is still flat
            if not self._is_flat(norm, p, point(a + 1e-6 * span)):
                return None
            b = a + span * self._last_true(lambda u: self._is_flat(norm, p, point(a + u * span)), 1e-6, 1.0)
        direction = math.copysign(1.0, span)

        def widen(fixed: float, moving: float, sign: float) -> float:
            flat = lambda delta: self._is_flat(norm, point(fixed), point(moving + sign * delta))
            return moving + sign * self._last_true(flat, 0.0, math.pi / 2.0)

        b = widen(a, b, direction)
        a = widen(b, a, -direction)
        width = b - a
        a, b = a + 1e-9 * width, b - 1e-9 * width
        logger.debug("[GLP] flat face between angles %.12f and %.12f", a, b)
        return point(a), point(b)

    def _face_path(self, face: Tuple[np.ndarray, np.ndarray], horizon: float,
                   rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Breakpoint parameters and vertices of a path alternating the two face directions"""
        low, high = self.settings.get('counterexample_segments', (0.5, 2.0))
        breaks, vertices = [0.0], [np.zeros(face[0].size)]
        i = 0
        while breaks[-1] < horizon:
            length = min(float(rng.uniform(low, high)), horizon - breaks[-1])
            vertices.append(vertices[-1] + length * face[i % 2])
            breaks.append(breaks[-1] + length)
            i += 1
        return np.array(breaks), np.array(vertices)

    @staticmethod
    def _polyline_at(breaks: np.ndarray, vertices: np.ndarray, s: np.ndarray) -> np.ndarray:
        return np.column_stack([np.interp(s, breaks, vertices[:, j]) for j in range(vertices.shape[1])])

    def nonconvex_counterexample(self, norm: NormOracle, horizon: float = 20.0, seed: Optional[int] = None,
                                 subintervals: Optional[int] = None, samples_per_unit: int = 64,
                                 verify: bool = True) -> CounterexampleResult:
        """Face-monotone horizontal curve that is a geodesic on every subarc yet not a line"""
        rng = np.random.default_rng(config.seed if seed is None else seed)
        face = self.find_flat_face(norm, rng)
        if face is None:
            raise ValidationError("norm is strictly convex: no flat face found", field='norm')
        breaks, vertices = self._face_path(face, horizon, rng)
        s = np.union1d(np.linspace(0.0, horizon, int(samples_per_unit * horizon) + 1), breaks)
        curve = horizontal_lift(self._polyline_at(breaks, vertices, s), 0.0, s)
        deviation = line_deviation(curve)

        gaps = []
        if verify:
            solver = GeodesicBVPService()
            M = self.settings.get('direct_intervals', 256)
            count = self.settings.get('subintervals', 10) if subintervals is None else subintervals
            for _ in range(count):
                length = float(rng.uniform(1.0, min(3.0, horizon)))
                start = float(rng.uniform(0.0, horizon - length))
                inner = breaks[(breaks > start) & (breaks < start + length)]
                knots = np.concatenate([[start], inner, [start + length]])
                path = self._polyline_at(breaks, vertices, knots)
                path = path - path[0]
                target = horizontal_lift(path, 0.0, knots).end
                arc_length = float(np.sum(norm.evaluate(np.diff(path, axis=0))))
                direct = solver.solve_direct(DirectProblem(norm, target, arc_length, M))
                gaps.append(float((arc_length - direct.length) / arc_length))
                logger.debug("[GLP] subarc [%.4f, %.4f]: length %.10g, direct %.10g (residual %.2e)",
                             start, start + length, arc_length, direct.length, direct.endpoint_residual)
        result = CounterexampleResult(curve=curve, face=face, line_deviation=deviation, subinterval_gaps=gaps)
        logger.info("[GLP] counterexample: line deviation %.4g, worst subarc gap %s", deviation,
                    f"{max(gaps):.3e}" if gaps else 'n/a')
        return result


_default_service: Optional[GLPLabService] = None


def _service() -> GLPLabService:
    global _default_service
    if _default_service is None:
        _default_service = GLPLabService()
    return _default_service


def glp_empirical(norm: NormOracle, trials: int = 20, horizon: float = 50.0, seed: Optional[int] = None) -> GLPReport:
    return _service().glp_empirical(norm, trials, horizon, seed)


def find_flat_face(norm: NormOracle, rng: Optional[np.random.Generator] = None):
    return _service().find_flat_face(norm, rng)


def nonconvex_counterexample(norm: NormOracle, horizon: float = 20.0, seed: Optional[int] = None,
                             **kwargs) -> CounterexampleResult:
    return _service().nonconvex_counterexample(norm, horizon, seed, **kwargs)
