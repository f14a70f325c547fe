"""
Heisenberg group arithmetic on H^n = R^{2n} x R.

Group law (z, t) * (z', t') = (z + z', t + t' + 2<z, J z'>), dilations
(z, t) -> (lz, l^2 t), horizontal lifts of planar paths, sub-Finsler lengths
and the homogeneous norms N_{p,a}.
"""

import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from core.exceptions import DimensionMismatchError, ValidationError
from models.data_models import (
    GroupPoint, HomogeneousNormDescriptor, SampledCurve, lift_heights, omega
)

logger = logging.getLogger(__name__)

HORIZONTALITY_FACTOR = 1e-6


def identity(n: int = 1) -> GroupPoint:
    return GroupPoint(np.zeros(2 * n), 0.0)


def group_point(coords: Sequence[float]) -> GroupPoint:
    """Split a flat vector (x_1..x_n, y_1..y_n, t) into a GroupPoint"""
    coords = np.asarray(coords, dtype=float).reshape(-1)
    if coords.size < 3 or coords.size % 2 == 0:
        raise ValidationError(f"expected 2n+1 coordinates, got {coords.size}", field='coords')
    return GroupPoint(coords[:-1], coords[-1])


def _check_same_dim(g: GroupPoint, h: GroupPoint) -> None:
    if g.n != h.n:
        raise DimensionMismatchError(f"cannot combine points of H^{g.n} and H^{h.n}", field='n')


def multiply(g: GroupPoint, h: GroupPoint) -> GroupPoint:
    _check_same_dim(g, h)
    return GroupPoint(g.z + h.z, g.t + h.t + 2.0 * float(omega(g.z, h.z)))


def inverse(g: GroupPoint) -> GroupPoint:
    return GroupPoint(-g.z, -g.t)


def dilate(lam: float, g: GroupPoint) -> GroupPoint:
    if not lam > 0:
        raise ValidationError(f"dilation factor must be positive, got {lam}", field='lambda')
    return GroupPoint(lam * g.z, lam * lam * g.t)


def horizontal_lift(planar: np.ndarray, t0: float = 0.0,
                    s_grid: Optional[np.ndarray] = None) -> SampledCurve:
    """Horizontal curve over a sampled planar path starting at height t0.

    Each linear piece contributes 2<z_j, J z_{j+1}> to the height, which is
    the trapezoidal rule applied to 2<z, J z'>.
    """
    planar = np.asarray(planar, dtype=float)
    if planar.ndim != 2 or planar.shape[0] < 2:
        raise ValidationError("a planar path needs at least 2 samples", field='planar')
    if s_grid is None:
        s_grid = np.linspace(0.0, 1.0, planar.shape[0])
    return SampledCurve(s_grid, planar, lift_heights(planar, t0))


def horizontal_projection(curve: SampledCurve) -> np.ndarray:
    return curve.z.copy()


def curve_velocities(curve: SampledCurve) -> np.ndarray:
    """Second-order finite-difference velocities of the projection"""
    edge_order = 2 if curve.size >= 3 else 1
    return np.gradient(curve.z, curve.s_grid, axis=0, edge_order=edge_order)


def horizontality_tolerance(curve: SampledCurve, factor: float = HORIZONTALITY_FACTOR) -> float:
    return factor * max(curve.diameter(), np.finfo(float).tiny)


def curve_length(curve: SampledCurve, norm, tol: Optional[float] = None) -> float:
    """Trapezoidal approximation of int N(gamma_I') ds"""
    if curve.n * 2 != norm.dim:
        raise DimensionMismatchError(f"curve lives in H^{curve.n}, norm acts on R^{norm.dim}", field='norm')
    if tol is None:
        tol = horizontality_tolerance(curve)
    if curve.horizontality_residual > tol:
        logger.warning("curve is not horizontal: residual %.3e exceeds %.3e",
                       curve.horizontality_residual, tol)
    speeds = norm.evaluate(curve_velocities(curve))
    return float(trapezoid(speeds, curve.s_grid))


def polyline_length(curve: SampledCurve, norm) -> float:
    """N-length of the piecewise-linear projection, exact for polygonal paths"""
    return float(np.sum(norm.evaluate(np.diff(curve.z, axis=0))))


def homogeneous_norm(desc: HomogeneousNormDescriptor, g: GroupPoint) -> float:
    """N_{p,a}(z, t) = max{||z||_p, a sqrt|t|}"""
    return float(max(np.linalg.norm(g.z, ord=desc.p), desc.a * np.sqrt(abs(g.t))))


def left_invariant_distance(desc: HomogeneousNormDescriptor, g: GroupPoint, h: GroupPoint) -> float:
    return homogeneous_norm(desc, multiply(inverse(g), h))


def left_translate(g: GroupPoint, curve: SampledCurve) -> SampledCurve:
    """Pointwise g * gamma(s); left translations preserve horizontality and length"""
    if g.n != curve.n:
        raise DimensionMismatchError(f"cannot translate a curve in H^{curve.n} by a point of H^{g.n}", field='n')
    z = curve.z + g.z
    t = curve.t + g.t + 2.0 * omega(g.z, curve.z)
    return SampledCurve(curve.s_grid, z, t)


def concatenate(first: SampledCurve, second: SampledCurve) -> SampledCurve:
    """Follow `first`, then `second` translated to start at the end of `first`"""
    shift = multiply(first.end, inverse(second.start))
    moved = left_translate(shift, second)
    s_tail = moved.s_grid[1:] - moved.s_grid[0] + first.s_grid[-1]
    return SampledCurve(
        np.concatenate([first.s_grid, s_tail]),
        np.vstack([first.z, moved.z[1:]]),
        np.concatenate([first.t, moved.t[1:]])
    )


def dilate_curve(lam: float, curve: SampledCurve, time_scale: float = 1.0) -> SampledCurve:
    """s -> delta_lam(gamma(time_scale * s)) on the rescaled grid"""
    if not lam > 0:
        raise ValidationError(f"dilation factor must be positive, got {lam}", field='lambda')
    return SampledCurve(curve.s_grid / time_scale, lam * curve.z, lam * lam * curve.t)


def line_deviation(curve: SampledCurve) -> float:
    """Max distance of the samples (z, t) from the line through the first and last sample"""
    coords = np.column_stack([curve.z, curve.t])
    offsets = coords - coords[0]
    chord = offsets[-1]
    length = np.linalg.norm(chord)
    if length == 0:
        return float(np.max(np.linalg.norm(offsets, axis=1)))
    along = offsets @ (chord / length)
    return float(np.max(np.linalg.norm(offsets - np.outer(along, chord / length), axis=1)))


def curve_header(n: int) -> List[str]:
    return ['s'] + [f'x{i + 1}' for i in range(n)] + [f'y{i + 1}' for i in range(n)] + ['t']


def curve_to_rows(curve: SampledCurve) -> List[List[float]]:
    """Rows (s, x_1..x_n, y_1..y_n, t) for the CSV writer"""
    table = np.column_stack([curve.s_grid, curve.z, curve.t])
    return [[float(value) for value in row] for row in table]


def curve_from_rows(header: Sequence[str], rows: Iterable[Sequence[float]]) -> SampledCurve:
    header = [name.strip() for name in header]
    n = (len(header) - 2) // 2
    if n < 1 or header != curve_header(n):
        raise ValidationError(f"unexpected curve columns {header}", field='header')
    table = np.asarray([[float(value) for value in row] for row in rows], dtype=float)
    if table.ndim != 2 or table.shape[1] != len(header):
        raise ValidationError("curve rows do not match the header", field='rows')
    return SampledCurve(table[:, 0], table[:, 1:-1], table[:, -1])
