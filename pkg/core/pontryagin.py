"""
Normal Pontryagin extremals of the sub-Finsler control problem on H^n.

State (a, z, t) follows
    a' = 4k J v,   v = R grad N*(a),   z' = -v,   t' = 2<z, J z'>
from a(0) = lambda(0), z(0) = 0, t(0) = 0. Controls are v = -gamma_I'.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from config import config
from core.exceptions import (
    ConstantCurveError, DualGradientUndefinedError, NotStrictlyConvexError, ValidationError
)
from core.heisenberg import curve_velocities
from core.convex_norms import fenchel_residual, make_example52
from models.data_models import (
    CheckResult, ExtremalReport, ExtremalTrace, Multiplier, SampledCurve,
    TraceDiagnostics, apply_j, omega
)
from models.norm_interfaces import NormOracle

logger = logging.getLogger(__name__)


def make_multiplier(norm: NormOracle, direction: Sequence[float], k: float, R: float = 1.0) -> Multiplier:
    """Scale a nonzero covector onto the dual sphere N* = R"""
    direction = np.asarray(direction, dtype=float)
    dual = float(norm.dual_evaluate(direction))
    if dual == 0:
        raise ValidationError("covector direction must be nonzero", field='lambda_init')
    return Multiplier(R * direction / dual, k, R)


def default_steps(T: float, steps_per_unit: Optional[int] = None) -> int:
    settings = config.integrator_config
    per_unit = steps_per_unit or settings['steps_per_unit']
    return max(settings['min_steps'], int(math.ceil(per_unit * T)))


def _fd_dual_gradient(norm: NormOracle, points: np.ndarray, settings: Dict[str, Any]) -> np.ndarray:
    """Central differences of N*, refusing points where one-sided slopes disagree"""
    h = settings['fd_step'] * np.maximum(np.linalg.norm(points, axis=-1, keepdims=True), 1.0)
    centre = np.asarray(norm.dual_evaluate(points))
    grad = np.empty_like(points)
    for i in range(points.shape[-1]):
        e = np.zeros(points.shape[-1])
        e[i] = 1.0
        ahead = np.asarray(norm.dual_evaluate(points + h * e))
        behind = np.asarray(norm.dual_evaluate(points - h * e))
        step = h[..., 0]
        kink = np.abs((ahead - centre) / step - (centre - behind) / step) > settings['kink_tolerance']
        if np.any(kink):
            bad = points[np.flatnonzero(kink)[0]]
            raise DualGradientUndefinedError(f"dual norm is not differentiable at {bad.tolist()}", point=bad)
        grad[..., i] = (ahead - behind) / (2.0 * step)
    return grad


def dual_gradient_with_fallback(norm: NormOracle, a: np.ndarray,
                                settings: Optional[Dict[str, Any]] = None) -> np.ndarray:
    """grad N*(a) from the oracle, by central differences where the oracle declines"""
    settings = settings or config.integrator_config
    a = np.asarray(a, dtype=float)
    flat = a.reshape(-1, a.shape[-1])
    grad = np.array(norm.dual_gradient(flat), dtype=float)
    undefined = np.any(np.isnan(grad), axis=-1)
    if np.any(undefined):
        grad[undefined] = _fd_dual_gradient(norm, flat[undefined], settings)
    return grad.reshape(a.shape)


def _flow(norm: NormOracle, a: np.ndarray, z: np.ndarray, k: np.ndarray, R: np.ndarray,
          settings: Dict[str, Any]):
    v = R[:, None] * dual_gradient_with_fallback(norm, a, settings)
    return 4.0 * k[:, None] * apply_j(v), -v, -2.0 * omega(z, v)


def _rk4(norm: NormOracle, lam: np.ndarray, k: np.ndarray, R: np.ndarray, T, steps: int,
         settings: Dict[str, Any], keep_history: bool = True):
    """Fixed-step classical RK4 for a batch of multipliers.

    T may be a scalar or one horizon per batch row. Returns (a, z, t)
    histories, or only the final states when keep_history is False.
    """
    batch, dim = lam.shape
    h = np.broadcast_to(np.asarray(T, dtype=float) / steps, (batch,)).copy()
    hv = h[:, None]
    a, z, t = lam.copy(), np.zeros((batch, dim)), np.zeros(batch)
    if keep_history:
        a_hist = np.empty((steps + 1, batch, dim))
        z_hist = np.empty((steps + 1, batch, dim))
        t_hist = np.empty((steps + 1, batch))
        a_hist[0], z_hist[0], t_hist[0] = a, z, t
    for j in range(steps):
        k1 = _flow(norm, a, z, k, R, settings)
        k2 = _flow(norm, a + 0.5 * hv * k1[0], z + 0.5 * hv * k1[1], k, R, settings)
        k3 = _flow(norm, a + 0.5 * hv * k2[0], z + 0.5 * hv * k2[1], k, R, settings)
        k4 = _flow(norm, a + hv * k3[0], z + hv * k3[1], k, R, settings)
        a = a + (hv / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        z = z + (hv / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        t = t + (h / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        if keep_history:
            a_hist[j + 1], z_hist[j + 1], t_hist[j + 1] = a, z, t
    if keep_history:
        return a_hist, z_hist, t_hist
    return a, z, t


def compute_diagnostics(norm: NormOracle, a: np.ndarray, v: np.ndarray, R: float) -> TraceDiagnostics:
    speed = norm.evaluate(v)
    dual = norm.dual_evaluate(a)
    pairing = np.sum(v * a, axis=-1)
    hamiltonian = 0.5 * speed ** 2 - pairing
    c = float(np.median(hamiltonian))
    return TraceDiagnostics(
        speed_dev=float(np.max(np.abs(speed - R))),
        dual_dev=float(np.max(np.abs(dual - R))),
        hamiltonian_dev=float(np.max(np.abs(hamiltonian - c))),
        pairing_dev=float(np.max(np.abs(pairing - R * R))),
        hamiltonian_constant=c
    )


def _check_integrable(norm: NormOracle, m: Multiplier, T: float) -> None:
    if not norm.flags.strictly_convex:
        raise NotStrictlyConvexError(f"{norm!r} is not strictly convex; its extremal controls are set-valued")
    m.validate(norm, config.integrator_config['multiplier_tolerance'])
    if not T > 0:
        raise ValidationError(f"T must be positive, got {T}", field='T')


def _package(norm: NormOracle, m: Multiplier, s_grid: np.ndarray, a: np.ndarray, z: np.ndarray,
             t: np.ndarray, settings: Dict[str, Any]) -> ExtremalTrace:
    v = m.R * dual_gradient_with_fallback(norm, a, settings)
    return ExtremalTrace(
        curve=SampledCurve(s_grid, z, t),
        a_samples=a,
        v_samples=v,
        diagnostics=compute_diagnostics(norm, a, v, m.R),
        multiplier=m
    )


def integrate_extremal(norm: NormOracle, m: Multiplier, T: float, steps: Optional[int] = None) -> ExtremalTrace:
    """Integrate the normal extremal of `m` on [0, T] with classical RK4"""
    _check_integrable(norm, m, T)
    settings = config.integrator_config
    steps = steps or default_steps(T)
    if steps < 1:
        raise ValidationError("steps must be positive", field='steps')
    logger.debug("[RK4] lambda(0)=%s k=%.6g R=%.6g T=%.6g steps=%d", m.lambda_init, m.k, m.R, T, steps)
    a, z, t = _rk4(norm, m.lambda_init[None, :], np.array([m.k]), np.array([m.R]), T, steps, settings)
    trace = _package(norm, m, np.linspace(0.0, T, steps + 1), a[:, 0], z[:, 0], t[:, 0], settings)
    logger.debug("[RK4] diagnostics %s", trace.diagnostics.to_dict())
    return trace


def integrate_extremal_batch(norm: NormOracle, multipliers: Sequence[Multiplier], T: float,
                             steps: Optional[int] = None) -> List[ExtremalTrace]:
    """The same flow for many multipliers at once, vectorised over a batch axis"""
    if not multipliers:
        return []
    for m in multipliers:
        _check_integrable(norm, m, T)
    settings = config.integrator_config
    steps = steps or default_steps(T)
    lam = np.vstack([m.lambda_init for m in multipliers])
    k = np.array([m.k for m in multipliers])
    R = np.array([m.R for m in multipliers])
    logger.debug("[RK4] batch of %d multipliers, T=%.6g steps=%d", len(multipliers), T, steps)
    a, z, t = _rk4(norm, lam, k, R, T, steps, settings)
    s_grid = np.linspace(0.0, T, steps + 1)
    return [_package(norm, m, s_grid, a[:, i], z[:, i], t[:, i], settings) for i, m in enumerate(multipliers)]


def integrate_endpoints(norm: NormOracle, lam: np.ndarray, k: np.ndarray, R: np.ndarray,
                        T: np.ndarray, steps: int) -> np.ndarray:
    """Final states (z, t) of many extremals with per-row horizons, no validation.

    Rows whose flow meets a kink of N* come back as NaN.
    """
    settings = config.integrator_config
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    batch = lam.shape[0]
    k, R, T = (np.broadcast_to(np.asarray(value, dtype=float), (batch,)) for value in (k, R, T))
    try:
        _, z, t = _rk4(norm, lam, k, R, T, steps, settings, keep_history=False)
        return np.column_stack([z, t])
    except DualGradientUndefinedError:
        if batch == 1:
            return np.full((1, lam.shape[1] + 1), np.nan)
    return np.vstack([
        integrate_endpoints(norm, lam[i:i + 1], k[i:i + 1], R[i:i + 1], T[i:i + 1], steps)
        for i in range(batch)
    ])


def trace_from_samples(norm: NormOracle, curve: SampledCurve, a: np.ndarray, v: np.ndarray,
                       multiplier: Optional[Multiplier] = None) -> ExtremalTrace:
    a = np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float)
    R = multiplier.R if multiplier else float(np.median(norm.evaluate(v)))
    return ExtremalTrace(curve, a, v, compute_diagnostics(norm, a, v, R), multiplier)


def trace_from_curve(norm: NormOracle, curve: SampledCurve, multiplier: Multiplier) -> ExtremalTrace:
    """Candidate trace of an arbitrary curve: v by finite differences, a from the costate formula"""
    if curve.z.shape[1] != norm.dim:
        raise ValidationError("curve and norm dimensions differ", field='curve')
    v = -curve_velocities(curve)
    a = multiplier.lambda_init - 4.0 * multiplier.k * apply_j(curve.z - curve.z[0])
    return trace_from_samples(norm, curve, a, v, multiplier)


def _fit_costate(trace: ExtremalTrace):
    """lambda(0) and k from the trace when no multiplier is attached"""
    rotated = -4.0 * apply_j(trace.curve.z - trace.curve.z[0])
    lam = trace.a_samples[0]
    drift = (trace.a_samples - lam).reshape(-1)
    basis = rotated.reshape(-1)
    denom = float(basis @ basis)
    k = float(basis @ drift / denom) if denom > 0 else 0.0
    return lam, k


def _check(name: str, values: np.ndarray, s_grid: np.ndarray, tol: float) -> CheckResult:
    worst = int(np.argmax(values))
    return CheckResult(name=name, passed=bool(values[worst] <= tol), worst_value=float(values[worst]),
                       worst_s=float(s_grid[worst]), tolerance=tol)


def verify_extremal(norm: NormOracle, trace: ExtremalTrace, tol: Optional[float] = None) -> ExtremalReport:
    """Check the normal Pontryagin conditions on a trace; never raises for failed checks.

    minimization      a(s) in dF_N(v(s)) via the Fenchel residual
    costate_linearity a(s) + 4k J gamma_I(s) = lambda(0)
    speed_and_dual    N(v) = N*(a) = R and v.a = R^2
    hamiltonian       F_N(v) - a.v constant along the trace
    """
    tol = config.integrator_config['verify_tolerance'] if tol is None else tol
    s = trace.s_grid
    if s.size < 3:
        raise ValidationError("verification needs at least 3 samples", field='trace')
    a, v, z = trace.a_samples, trace.v_samples, trace.curve.z
    if trace.multiplier is not None:
        lam, k, R = trace.multiplier.lambda_init, trace.multiplier.k, trace.multiplier.R
    else:
        lam, k = _fit_costate(trace)
        R = float(np.median(norm.evaluate(v)))
    scale = max(1.0, R * R)

    speed = norm.evaluate(v)
    dual = norm.dual_evaluate(a)
    pairing = np.sum(v * a, axis=-1)
    hamiltonian = 0.5 * speed ** 2 - pairing
    c = float(np.median(hamiltonian))
    checks = {
        'minimization': _check('minimization', np.atleast_1d(fenchel_residual(norm, v, a)), s, tol * scale),
        'costate_linearity': _check(
            'costate_linearity',
            np.linalg.norm(a - lam + 4.0 * k * apply_j(z - z[0]), axis=-1), s, tol * max(1.0, R)),
        'speed_and_dual': _check(
            'speed_and_dual',
            np.maximum(np.maximum(np.abs(speed - R), np.abs(dual - R)), np.abs(pairing - R * R) / max(1.0, R)),
            s, tol * max(1.0, R)),
        'hamiltonian': _check('hamiltonian', np.abs(hamiltonian - c), s, tol * scale),
    }

    try:
        selection = R * dual_gradient_with_fallback(norm, a)
        control_selection_dev = float(np.max(np.linalg.norm(v - selection, axis=-1)))
    except DualGradientUndefinedError:
        control_selection_dev = None

    report = ExtremalReport(checks=checks, hamiltonian_constant=c, control_selection_dev=control_selection_dev)
    if report.passed:
        report.hamiltonian_matches_minus_half_r2 = bool(abs(c + 0.5 * R * R) <= tol * scale)
    else:
        logger.debug("Extremal check failed: %s", ", ".join(report.failed()))
    return report


def reparametrize_unit_speed(norm: NormOracle, curve: SampledCurve) -> SampledCurve:
    """Same image on [0, length] with N-speed 1, by cumulative chord length"""
    chords = norm.evaluate(np.diff(curve.z, axis=0))
    arclength = np.concatenate([[0.0], np.cumsum(chords)])
    total = float(arclength[-1])
    if not total > 1e-300:
        raise ConstantCurveError("curve has zero length")
    keep = np.concatenate([[True], chords > total * 1e-15])
    arclength, z, t = arclength[keep], curve.z[keep], curve.t[keep]
    s_new = np.linspace(0.0, total, curve.size)
    z_new = np.column_stack([np.interp(s_new, arclength, z[:, j]) for j in range(z.shape[1])])
    t_new = np.interp(s_new, arclength, t)
    z_new[-1], t_new[-1] = curve.z[-1], curve.t[-1]
    return SampledCurve(s_new, z_new, t_new)


def multiplier_family_check_example52(ell: float, k: float, samples: int = 101) -> bool:
    """Whether (ell, 1, k) is a multiplier of the example52 segment (0, -s, 0) on [0, 1].

    Admissible iff max(|ell|, |ell - 4k|) <= 1; then a(s) = (ell - 4ks, 1) stays on
    the dual sphere with grad N*(a) = (0, 1) wherever |a_x| < 1.
    """
    if max(abs(ell), abs(ell - 4.0 * k)) > 1.0 + 1e-12:
        return False
    norm = make_example52()
    s = np.linspace(0.0, 1.0, samples)
    a = np.column_stack([ell - 4.0 * k * s, np.ones_like(s)])
    on_sphere = np.max(np.abs(norm.dual_evaluate(a) - 1.0)) <= 1e-12
    interior = np.abs(a[:, 0]) < 1.0
    grad = norm.dual_gradient(a[interior])
    selects_segment = np.allclose(grad, [0.0, 1.0], atol=1e-12) if grad.size else True
    if not (on_sphere and selects_segment):
        logger.warning("multiplier (%.6g, %.6g) admissible but numerical check failed", ell, k)
        return False
    return True


def convergence_order(norm: NormOracle, m: Multiplier, T: float, steps: int, halvings: int = 2) -> Dict[str, Any]:
    """Endpoint differences under step halving; ratios near 16 indicate fourth order"""
    ladder = [steps * 2 ** i for i in range(halvings + 1)]
    traces = [integrate_extremal(norm, m, T, n) for n in ladder]
    ends = [trace.curve.end.as_vector() for trace in traces]
    differences = [float(np.linalg.norm(ends[i] - ends[i + 1])) for i in range(len(ends) - 1)]
    ratios = [differences[i] / differences[i + 1] if differences[i + 1] > 0 else math.inf
              for i in range(len(differences) - 1)]
    return {
        'steps': ladder,
        'endpoint_differences': differences,
        'ratios': ratios,
        'diagnostics': [trace.diagnostics.to_dict() for trace in traces]
    }
