"""
Two-point boundary value problem for sub-Finsler geodesics

Shooting on the normal extremal flow finds multipliers whose extremal reaches
a target g in H^n; the direct method discretises inf int_0^T F_N(v) with
piecewise-constant controls and serves as an independent cross-check.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize

from config import config
from core.exceptions import NotStrictlyConvexError, ShootingConvergenceError, ValidationError
from core.heisenberg import homogeneous_norm, horizontal_lift, inverse, multiply
from core.pontryagin import integrate_endpoints, integrate_extremal
from core.task_runner import run_trials
from models.data_models import (
    DirectProblem, DirectSolution, EquivalenceReport, ExtremalTrace, GroupPoint,
    HomogeneousNormDescriptor, Multiplier, ShootingMode, ShootingProblem, ShootingResult,
    apply_j
)
from models.norm_interfaces import NormOracle
from services.isoperimetrix import isoperimetrix_initial_guesses

logger = logging.getLogger(__name__)

VERTICAL_HINT = "target on vertical axis requires k≠0"


def sphere_direction(angles: np.ndarray) -> np.ndarray:
    """Unit vectors in R^d from d-1 hyperspherical angles per row"""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    batch, m = angles.shape
    out = np.empty((batch, m + 1))
    sin_prod = np.ones(batch)
    for i in range(m):
        out[:, i] = sin_prod * np.cos(angles[:, i])
        sin_prod = sin_prod * np.sin(angles[:, i])
    out[:, m] = sin_prod
    return out


def direction_angles(u: Sequence[float]) -> np.ndarray:
    """Inverse of sphere_direction for a single nonzero vector"""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    m = u.size - 1
    angles = np.empty(m)
    for i in range(m - 1):
        angles[i] = math.atan2(float(np.linalg.norm(u[i + 1:])), float(u[i]))
    angles[m - 1] = math.atan2(float(u[m]), float(u[m - 1]))
    return angles


def control_endpoint(controls: np.ndarray, T: float) -> GroupPoint:
    """End of the horizontal curve driven by piecewise-constant controls, gamma_I' = -v"""
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    delta = T / controls.shape[0]
    before = np.cumsum(controls, axis=0) - controls
    t_end = 2.0 * delta * delta * float(np.sum(before * apply_j(controls)))
    return GroupPoint(-delta * np.sum(controls, axis=0), t_end)


def control_cost(norm: NormOracle, controls: np.ndarray, T: float) -> float:
    """Running cost sum F_N(v_j) * Delta"""
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    return float(np.sum(norm.squared(controls)) * T / controls.shape[0])


def control_curve(controls: np.ndarray, T: float):
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    M = controls.shape[0]
    planar = np.vstack([np.zeros(controls.shape[1]), -(T / M) * np.cumsum(controls, axis=0)])
    return horizontal_lift(planar, 0.0, np.linspace(0.0, T, M + 1))


def extremal_cost(norm: NormOracle, trace: ExtremalTrace) -> float:
    """int F_N(v) ds on the trace grid"""
    return float(trapezoid(norm.squared(trace.v_samples), trace.s_grid))


@dataclass
class _NewtonOutcome:
    x: np.ndarray
    residual: np.ndarray
    iterations: int
    status: str
    label: str = ''

    @property
    def residual_norm(self) -> float:
        value = float(np.linalg.norm(self.residual))
        return value if math.isfinite(value) else math.inf


class GeodesicBVPService:
    """
    Shooting and direct solvers for the two-point problem.

    Settings come from config.shooting_config and config.direct_config; both
    dicts may be overridden per instance.
    """

    def __init__(self, shooting_settings: Optional[Dict[str, Any]] = None,
                 direct_settings: Optional[Dict[str, Any]] = None, seed: Optional[int] = None):
        self.shooting = dict(config.shooting_config, **(shooting_settings or {}))
        self.direct = dict(config.direct_config, **(direct_settings or {}))
        self.steps = self.shooting.get('steps', 1024)
        self.max_iter = self.shooting.get('max_iter', 60)
        self.tolerance = self.shooting.get('tolerance', 1e-10)
        self.seed = config.seed if seed is None else seed
        self._n21: Dict[int, HomogeneousNormDescriptor] = {}

    # ------------------------------------------------------------------
    # endpoint maps
    # ------------------------------------------------------------------

    def _unit_speed_map(self, norm: NormOracle, target: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        """Residuals for rows (angles..., k, T) with lambda(0) on the unit dual sphere"""
        d = norm.dim

        def residuals(X: np.ndarray) -> np.ndarray:
            X = np.atleast_2d(X)
            out = np.full((X.shape[0], d + 1), np.nan)
            u = sphere_direction(X[:, :d - 1])
            lam = u / np.asarray(norm.dual_evaluate(u))[:, None]
            k, T = X[:, d - 1], X[:, d]
            valid = np.isfinite(X).all(axis=1) & (T > 0)
            if np.any(valid):
                out[valid] = integrate_endpoints(norm, lam[valid], k[valid], 1.0, T[valid], self.steps) - target
            return out

        return residuals

    def _fixed_time_map(self, norm: NormOracle, target: np.ndarray, T: float) -> Callable[[np.ndarray], np.ndarray]:
        """Residuals for rows (lambda(0)..., k) at fixed horizon T, R = N*(lambda(0))"""
        d = norm.dim

        def residuals(X: np.ndarray) -> np.ndarray:
            X = np.atleast_2d(X)
            out = np.full((X.shape[0], d + 1), np.nan)
            lam, k = X[:, :d], X[:, d]
            R = np.asarray(norm.dual_evaluate(lam))
            valid = np.isfinite(X).all(axis=1) & (R > 0)
            if np.any(valid):
                out[valid] = integrate_endpoints(norm, lam[valid], k[valid], R[valid], T, self.steps) - target
            return out

        return residuals

    @staticmethod
    def _unit_multiplier(norm: NormOracle, x: np.ndarray) -> Tuple[Multiplier, float]:
        d = norm.dim
        u = sphere_direction(x[:d - 1])[0]
        lam = u / float(norm.dual_evaluate(u))
        return Multiplier(lam, float(x[d - 1]), 1.0), float(x[d])

    # ------------------------------------------------------------------
    # root finding
    # ------------------------------------------------------------------

    def _newton(self, residuals: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, tol: float,
                label: str) -> _NewtonOutcome:
        """Damped Newton with a forward-difference Jacobian and backtracking"""
        x = np.array(x0, dtype=float)
        r = residuals(x)[0]
        if not np.all(np.isfinite(r)):
            return _NewtonOutcome(x, r, 0, 'invalid-start', label)
        jac_step = self.shooting.get('jacobian_step', 1e-7)
        min_damping = self.shooting.get('min_damping', 1.0 / 1024)
        damping = 2.0 ** -np.arange(0, int(round(-math.log2(min_damping))) + 1)
        for it in range(self.max_iter):
            res = float(np.linalg.norm(r))
            if res <= tol:
                return _NewtonOutcome(x, r, it, 'converged', label)
            h = jac_step * np.maximum(1.0, np.abs(x))
            shifted = residuals(x + np.diag(h))
            jacobian = ((shifted - r) / h[:, None]).T
            if not np.all(np.isfinite(jacobian)) or np.linalg.cond(jacobian) > 1e13:
                logger.debug("[SHOOT] %s: Jacobian breakdown at iteration %d", label, it)
                return _NewtonOutcome(x, r, it, 'breakdown', label)
            delta = np.linalg.lstsq(jacobian, -r, rcond=None)[0]
            trial = residuals(x + delta)[0]
            if np.all(np.isfinite(trial)) and np.linalg.norm(trial) < (1.0 - 1e-4) * res:
                x, r = x + delta, trial
                continue
            candidates = x + damping[1:, None] * delta
            trials = residuals(candidates)
            norms = np.linalg.norm(trials, axis=1)
            accepted = np.flatnonzero(np.isfinite(norms) & (norms < (1.0 - 1e-4 * damping[1:]) * res))
            if accepted.size == 0:
                logger.debug("[SHOOT] %s: stagnation at residual %.3e", label, res)
                return _NewtonOutcome(x, r, it, 'stagnation', label)
            x, r = candidates[accepted[0]], trials[accepted[0]]
        status = 'converged' if np.linalg.norm(r) <= tol else 'max-iter'
        return _NewtonOutcome(x, r, self.max_iter, status, label)

    def _nelder_mead(self, residuals: Callable[[np.ndarray], np.ndarray], x0: np.ndarray) -> np.ndarray:
        def objective(x):
            r = residuals(x)[0]
            return float(r @ r) if np.all(np.isfinite(r)) else 1e300

        result = minimize(objective, x0, method='Nelder-Mead',
                          options={'maxiter': self.shooting.get('nelder_mead_max_iter', 4000),
                                   'xatol': 1e-13, 'fatol': 1e-26})
        return result.x

    def _solve(self, residuals: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, tol: float,
               label: str) -> _NewtonOutcome:
        outcome = self._newton(residuals, x0, tol, label)
        if outcome.status in ('converged', 'invalid-start'):
            return outcome
        logger.debug("[SHOOT] %s: Nelder-Mead fallback after %s", label, outcome.status)
        polished = self._newton(residuals, self._nelder_mead(residuals, outcome.x), tol, label)
        polished.iterations += outcome.iterations
        if polished.residual_norm > outcome.residual_norm:
            return outcome
        return polished

    # ------------------------------------------------------------------
    # initial guesses
    # ------------------------------------------------------------------

    def _unit_vector(self, norm: NormOracle, m: Multiplier, T: float) -> np.ndarray:
        """Unknowns (angles, k, T) of a multiplier rescaled to unit speed"""
        R = float(norm.dual_evaluate(m.lambda_init))
        return np.concatenate([direction_angles(m.lambda_init), [m.k / R, T * R]])

    def _chord_guess(self, norm: NormOracle, target: GroupPoint) -> Optional[np.ndarray]:
        length = float(norm.evaluate(target.z))
        if length == 0 or abs(target.t) > self.shooting.get('horizontal_ratio', 1e-3) * length ** 2:
            return None
        v = -target.z / length
        lam = norm.subgradient(v)
        return np.concatenate([direction_angles(lam), [0.0, length]])

    def _seeds(self, norm: NormOracle, problem: ShootingProblem) -> Dict[str, np.ndarray]:
        seeds: Dict[str, np.ndarray] = {}
        if problem.init_guess is not None:
            T = problem.init_T or float(norm.evaluate(problem.target.z)) or math.sqrt(abs(problem.target.t))
            seeds['init'] = self._unit_vector(norm, problem.init_guess, T)
        chord = self._chord_guess(norm, problem.target)
        if chord is not None:
            seeds['chord'] = chord
        if norm.dim == 2:
            guesses = isoperimetrix_initial_guesses(norm, problem.target,
                                                    count=self.shooting.get('iso_seeds', 3))
            for i, (m, T) in enumerate(guesses):
                seeds[f'iso-{i}'] = self._unit_vector(norm, m, T)
        return seeds

    def _random_seeds(self, norm: NormOracle, target: GroupPoint, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        scale = max(float(norm.evaluate(target.z)), math.sqrt(abs(target.t)))
        seeds = {}
        for i in range(self.shooting.get('random_starts', 16)):
            u = rng.standard_normal(norm.dim)
            k = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 2.0) / scale
            T = scale * rng.uniform(1.0, 4.0)
            seeds[f'random-{i:02d}'] = np.concatenate([direction_angles(u), [k, T]])
        return seeds

    def _run_seeds(self, residuals, seeds: Dict[str, np.ndarray], tol: float) -> List[_NewtonOutcome]:
        tasks = {label: (lambda x0=x0, label=label: self._solve(residuals, x0, tol, label))
                 for label, x0 in seeds.items()}
        outcomes = []
        for label, outcome in run_trials(tasks, return_exceptions=True):
            if isinstance(outcome, Exception):
                logger.debug("[SHOOT] seed %s raised %s", label, outcome)
                continue
            logger.debug("[SHOOT] seed %s: %s after %d iterations, residual %.3e",
                         label, outcome.status, outcome.iterations, outcome.residual_norm)
            outcomes.append(outcome)
        return outcomes

    def _distinct(self, norm: NormOracle, outcomes: List[_NewtonOutcome]) -> List[_NewtonOutcome]:
        tol = self.shooting.get('duplicate_tolerance', 1e-6)
        kept: List[Tuple[np.ndarray, _NewtonOutcome]] = []
        for outcome in sorted(outcomes, key=lambda o: (o.x[-1], o.label)):
            m, T = self._unit_multiplier(norm, outcome.x)
            key = np.concatenate([m.lambda_init, [m.k, T]])
            if all(np.linalg.norm(key - other) > tol * max(1.0, np.linalg.norm(other)) for other, _ in kept):
                kept.append((key, outcome))
        return [outcome for _, outcome in kept]

    # ------------------------------------------------------------------
    # public operations
    # ------------------------------------------------------------------

    def _group_residual(self, end: GroupPoint, target: GroupPoint) -> float:
        desc = self._n21.setdefault(target.n, HomogeneousNormDescriptor(2.0, 1.0, target.n))
        return homogeneous_norm(desc, multiply(inverse(end), target))

    def _result(self, norm: NormOracle, problem: ShootingProblem, m: Multiplier, T: float,
                outcome: _NewtonOutcome) -> ShootingResult:
        trace = integrate_extremal(norm, m, T, self.steps)
        end = trace.curve.end
        return ShootingResult(
            multiplier=m,
            trace=trace,
            T=T,
            residual=float(np.linalg.norm(end.as_vector() - problem.target.as_vector())),
            group_residual=self._group_residual(end, problem.target),
            cost=extremal_cost(norm, trace),
            iterations=outcome.iterations,
            start=outcome.label
        )

    def _to_fixed_time(self, norm: NormOracle, problem: ShootingProblem, outcome: _NewtonOutcome,
                       tol: float) -> Optional[Tuple[Multiplier, _NewtonOutcome]]:
        """Exact rescaling lambda -> R lambda, k -> R k with R = L / T, then Newton polish"""
        m, length = self._unit_multiplier(norm, outcome.x)
        R = length / problem.T
        residuals = self._fixed_time_map(norm, problem.target.as_vector(), problem.T)
        x0 = np.concatenate([R * m.lambda_init, [R * m.k]])
        polished = self._newton(residuals, x0, tol, outcome.label)
        if polished.status != 'converged':
            return None
        polished.iterations += outcome.iterations
        lam = polished.x[:norm.dim]
        return Multiplier(lam, float(polished.x[norm.dim]), float(norm.dual_evaluate(lam))), polished

    def shoot(self, problem: ShootingProblem, tol: Optional[float] = None, seed: Optional[int] = None) -> ShootingResult:
        """Multiplier and extremal trace reaching problem.target; alternatives ranked by cost"""
        norm = problem.norm
        if not norm.flags.strictly_convex:
            raise NotStrictlyConvexError(f"{norm!r} is not strictly convex; shooting needs single-valued controls")
        tol = self.tolerance if tol is None else tol
        target = problem.target.as_vector()
        residuals = self._unit_speed_map(norm, target)
        logger.debug("[SHOOT] target %s, mode %s, tol %.1e", target.tolist(), problem.mode.value, tol)

        outcomes = self._run_seeds(residuals, self._seeds(norm, problem), tol)
        converged = [o for o in outcomes if o.status == 'converged']
        if not converged:
            rng = np.random.default_rng(self.seed if seed is None else seed)
            outcomes += self._run_seeds(residuals, self._random_seeds(norm, problem.target, rng), tol)
            converged = [o for o in outcomes if o.status == 'converged']

        results = []
        for outcome in self._distinct(norm, converged):
            if problem.mode is ShootingMode.FIXED_T:
                fixed = self._to_fixed_time(norm, problem, outcome, tol)
                if fixed is None:
                    continue
                m, polished = fixed
                results.append(self._result(norm, problem, m, problem.T, polished))
            else:
                m, T = self._unit_multiplier(norm, outcome.x)
                results.append(self._result(norm, problem, m, T, outcome))

        if not results:
            best = min(outcomes, key=lambda o: o.residual_norm, default=None)
            residual = best.residual_norm if best else math.inf
            message = f"no convergence: best residual {residual:.3e} after {len(outcomes)} starts"
            if not np.any(problem.target.z):
                message += f" ({VERTICAL_HINT})"
            attempt = None
            if best is not None:
                m, T = self._unit_multiplier(norm, best.x)
                attempt = {'multiplier': m.to_dict(), 'T': T, 'residual': residual, 'start': best.label}
            logger.error("[SHOOT] %s", message)
            raise ShootingConvergenceError(message, best=attempt, residual=residual)

        results.sort(key=lambda r: (r.cost, r.start))
        best, others = results[0], results[1:]
        best.alternatives = others
        logger.info("[SHOOT] converged from %s: T=%.10g k=%.6g residual %.2e (%d alternatives)",
                    best.start, best.T, best.multiplier.k, best.residual, len(others))
        return best

    def initial_controls(self, problem: DirectProblem) -> np.ndarray:
        """Chord plus one planar loop whose enclosed height roughly matches the target"""
        norm, target, T, M = problem.norm, problem.target, problem.T, problem.M
        theta = 2.0 * np.pi * (np.arange(M) + 0.5) / M
        drift = np.tile(target.z / T, (M, 1))
        # a counterclockwise loop of radius r adds -4 pi r^2 to the height
        radius = math.sqrt(abs(target.t) / (4.0 * np.pi))
        orientation = 1.0 if target.t < 0 else -1.0
        loop = np.zeros((M, norm.dim))
        n = norm.dim // 2
        loop[:, 0] = -np.sin(theta)
        loop[:, n] = orientation * np.cos(theta)
        return -(drift + radius * (2.0 * np.pi / T) * loop)

    def solve_direct(self, problem: DirectProblem, initial: Optional[np.ndarray] = None) -> DirectSolution:
        """Augmented-Lagrangian L-BFGS-B on piecewise-constant controls"""
        norm, T, M = problem.norm, problem.T, problem.M
        if problem.target.z.size != norm.dim:
            raise ValidationError("target dimension does not match the norm", field='target')
        dim = norm.dim
        delta = T / M
        target = problem.target.as_vector()
        V0 = self.initial_controls(problem) if initial is None else np.asarray(initial, dtype=float)
        if V0.shape != (M, dim):
            raise ValidationError(f"initial controls must have shape ({M}, {dim})", field='initial')
        mu = np.zeros(dim + 1)

        def constraint(V):
            total = np.sum(V, axis=0)
            before = np.cumsum(V, axis=0) - V
            t_end = 2.0 * delta * delta * float(np.sum(before * apply_j(V)))
            return np.concatenate([-delta * total, [t_end]]) - target, total, before

        def lagrangian(flat, rho):
            V = flat.reshape(M, dim)
            c, total, before = constraint(V)
            speeds = norm.evaluate(V)
            value = delta * 0.5 * float(speeds @ speeds) + float(mu @ c) + 0.5 * rho * float(c @ c)
            weight = mu + rho * c
            after = total - before - V
            grad = delta * speeds[:, None] * norm.subgradient(V)
            grad -= delta * weight[:dim]
            grad += weight[dim] * 2.0 * delta * delta * apply_j(after - before)
            return value, grad.reshape(-1)

        flat = V0.reshape(-1)
        value = math.inf
        for rho in problem.penalty:
            result = minimize(lagrangian, flat, args=(rho,), jac=True, method='L-BFGS-B',
                              options={'maxiter': self.direct.get('max_iter_per_stage', 2000),
                                       'gtol': self.direct.get('gtol', 1e-12), 'ftol': 1e-15})
            flat, value = result.x, float(result.fun)
            c = constraint(flat.reshape(M, dim))[0]
            mu = mu + rho * c
            logger.debug("[DIRECT] rho=%.0e value=%.10g residual=%.3e (%s)", rho, value, np.linalg.norm(c),
                         result.message)

        controls = flat.reshape(M, dim)
        speeds = norm.evaluate(controls)
        residual = float(np.linalg.norm(constraint(controls)[0]))
        solution = DirectSolution(
            controls=controls,
            curve=control_curve(controls, T),
            cost=float(delta * 0.5 * np.sum(speeds ** 2)),
            length=float(delta * np.sum(speeds)),
            endpoint_residual=residual,
            penalized_cost=value
        )
        logger.info("[DIRECT] M=%d cost=%.10g length=%.10g residual=%.2e", M, solution.cost, solution.length, residual)
        return solution

    def equivalence_check(self, norm: NormOracle, controls: np.ndarray, T: float,
                          s_grid: Optional[np.ndarray] = None, tol: float = 1e-8) -> EquivalenceReport:
        """(int N(v))^2 against T int N(v)^2; never raises for a strict inequality.

        Without s_grid the controls are piecewise constant on a uniform grid;
        with s_grid they are samples integrated by the trapezoidal rule.
        """
        if not T > 0:
            raise ValidationError("T must be positive", field='T')
        speeds = np.asarray(norm.evaluate(np.atleast_2d(controls)), dtype=float)
        if s_grid is None:
            length = float(np.sum(speeds)) * T / speeds.size
            energy = float(np.sum(speeds ** 2)) * T / speeds.size
        else:
            length = float(trapezoid(speeds, s_grid))
            energy = float(trapezoid(speeds ** 2, s_grid))
        gap = T * energy - length ** 2
        return EquivalenceReport(length=length, energy=energy, T=T, gap=gap,
                                 equal=bool(abs(gap) <= tol * max(1.0, T * energy)))

    def direct_cross_check(self, norm: NormOracle, target: GroupPoint, result: ShootingResult,
                           M: Optional[int] = None) -> Dict[str, Any]:
        """Relative gap between the direct-method cost and the extremal cost at the same T"""
        problem = DirectProblem(norm, target, result.T, M or self.direct.get('intervals', 256),
                                list(self.direct.get('penalty_schedule', [1e1, 1e2, 1e3, 1e4, 1e5])))
        direct = self.solve_direct(problem)
        gap = (direct.cost - result.cost) / result.cost
        logger.debug("[DIRECT] cross-check gap %.3e", gap)
        return {'direct_cost': direct.cost, 'extremal_cost': result.cost, 'relative_gap': gap,
                'endpoint_residual': direct.endpoint_residual, 'direct': direct}


_default_service: Optional[GeodesicBVPService] = None


def _service() -> GeodesicBVPService:
    global _default_service
    if _default_service is None:
        _default_service = GeodesicBVPService()
    return _default_service


def shoot(problem: ShootingProblem, tol: Optional[float] = None) -> ShootingResult:
    return _service().shoot(problem, tol)


def solve_direct(problem: DirectProblem) -> DirectSolution:
    return _service().solve_direct(problem)


def equivalence_check(norm: NormOracle, controls: np.ndarray, T: float,
                      s_grid: Optional[np.ndarray] = None, tol: float = 1e-8) -> EquivalenceReport:
    return _service().equivalence_check(norm, controls, T, s_grid, tol)


def direct_cross_check(norm: NormOracle, target: GroupPoint, result: ShootingResult,
                       M: Optional[int] = None) -> Dict[str, Any]:
    return _service().direct_cross_check(norm, target, result, M)
