"""
Isoperimetrix Service for H^1

Builds the polar body of a planar norm ball, the isoperimetrix (polar
boundary turned by a quarter turn counterclockwise) and the H^1 geodesics
whose projections are dilated and translated isoperimetrix arcs:
    z(s) = J (a(s) - lambda(0)) / (4k),   a(s) on the dual sphere,
with a(s) running counterclockwise for k > 0 and clockwise for k < 0.
"""

import logging
import math
import threading
from collections import OrderedDict
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import directed_hausdorff

from config import config
from core.exceptions import (
    AdmissibleRangeError, DimensionMismatchError, NotStrictlyConvexError, ValidationError
)
from core.pontryagin import dual_gradient_with_fallback
from models.data_models import GroupPoint, Multiplier, PlanarConvexBody, SampledCurve, apply_j, lift_heights
from models.norm_interfaces import NormOracle

# Configure logging
logger = logging.getLogger(__name__)


def _require_planar(norm: NormOracle) -> None:
    if norm.dim != 2:
        raise DimensionMismatchError(f"isoperimetrix needs a planar norm, got dimension {norm.dim}", field='dim')


def hausdorff_distance(first: np.ndarray, second: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point clouds"""
    return float(max(directed_hausdorff(first, second)[0], directed_hausdorff(second, first)[0]))


def tangent_turning(points: np.ndarray, closed: bool = True, corner_angle: Optional[float] = None) -> Dict[str, Any]:
    """Discrete turning of the tangent between consecutive edges of a polyline.

    The polyline is reported as C^1 when no single vertex turns by more than
    corner_angle; a true corner keeps its turning as the sampling is refined.
    """
    corner_angle = config.isoperimetrix_config['corner_angle'] if corner_angle is None else corner_angle
    points = np.asarray(points, dtype=float)
    edges = (np.roll(points, -1, axis=0) - points) if closed else np.diff(points, axis=0)
    lengths = np.linalg.norm(edges, axis=1)
    edges, lengths = edges[lengths > 0], lengths[lengths > 0]
    following = np.roll(edges, -1, axis=0) if closed else edges[1:]
    current = edges if closed else edges[:-1]
    cross = current[:, 0] * following[:, 1] - current[:, 1] * following[:, 0]
    turning = np.abs(np.arctan2(cross, np.sum(current * following, axis=1)))
    spans = 0.5 * (lengths + (np.roll(lengths, -1) if closed else np.append(lengths[1:], lengths[-1])))[:len(turning)]
    worst = int(np.argmax(turning))
    return {
        'max_turning': float(turning[worst]),
        'max_turning_per_length': float(np.max(turning / spans)),
        'worst_index': worst,
        'total_turning': float(np.sum(turning)),
        'is_c1': bool(turning[worst] <= corner_angle)
    }


class IsoperimetrixService:
    """
    Busemann isoperimetrix construction and the geodesics it generates.
    """

    def __init__(self, settings: Optional[Dict[str, Any]] = None):
        self.config = settings or config.isoperimetrix_config
        self.resolution = self.config.get('resolution', 1024)
        self.geodesic_resolution = self.config.get('geodesic_resolution', 4096)
        self.dedupe_tolerance = self.config.get('dedupe_tolerance', 1e-12)
        self.convexity_tolerance = self.config.get('convexity_tolerance', 1e-9)
        self.cache_size = self.config.get('cache_size', 32)
        self._boundary_cache: "OrderedDict[Tuple[str, int], np.ndarray]" = OrderedDict()
        self._cache_lock = threading.Lock()

    def polar_boundary(self, norm: NormOracle, resolution: Optional[int] = None) -> np.ndarray:
        """Counterclockwise points of the dual sphere N* = 1"""
        _require_planar(norm)
        resolution = resolution or self.resolution
        if resolution < 3:
            raise ValidationError("resolution must be at least 3", field='resolution')
        key = (repr(norm.descriptor()), resolution) if norm.descriptor().get('family') != 'function' else None
        if key is not None:
            with self._cache_lock:
                if key in self._boundary_cache:
                    self._boundary_cache.move_to_end(key)
                    return self._boundary_cache[key]

        theta = 2.0 * np.pi * np.arange(resolution) / resolution
        directions = np.column_stack([np.cos(theta), np.sin(theta)])
        radial = directions / np.asarray(norm.dual_evaluate(directions))[:, None]
        # corners of the unit ball expose whole faces of the polar: fan-fill them
        sphere = norm.unit_sphere_point(directions)
        fan = [norm.subdifferential(z).witnesses for z in sphere]
        points = np.vstack([radial] + fan)

        angles = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
        order = np.argsort(angles, kind='stable')
        points, angles = points[order], angles[order]
        keep = np.ones(len(points), dtype=bool)
        last = 0
        for i in range(1, len(points)):
            if np.linalg.norm(points[i] - points[last]) <= self.dedupe_tolerance or angles[i] - angles[last] <= 1e-15:
                keep[i] = False
            else:
                last = i
        if np.linalg.norm(points[last] - points[0]) <= self.dedupe_tolerance:
            keep[last] = False
        boundary = points[keep]
        if key is not None:
            with self._cache_lock:
                self._boundary_cache[key] = boundary
                while len(self._boundary_cache) > self.cache_size:
                    self._boundary_cache.popitem(last=False)
        return boundary

    def polar_body(self, norm: NormOracle, resolution: Optional[int] = None) -> PlanarConvexBody:
        """B° = {w : w.z <= 1 for z in B_N}; its support function is N itself"""
        boundary = self.polar_boundary(norm, resolution)
        body = PlanarConvexBody(boundary, support=lambda d: float(norm.evaluate(np.asarray(d, dtype=float))))
        if not body.is_convex(self.convexity_tolerance):
            logger.warning("Polar boundary failed the convexity check at resolution %d", len(boundary))
        return body

    def isoperimetrix_curve(self, norm: NormOracle, resolution: Optional[int] = None) -> PlanarConvexBody:
        """Polar boundary turned counterclockwise by pi/2"""
        polar = self.polar_boundary(norm, resolution)
        return PlanarConvexBody(apply_j(polar),
                                support=lambda d: float(norm.evaluate(apply_j(np.asarray(d, dtype=float)))))

    def bipolar_error(self, norm: NormOracle, resolution: Optional[int] = None) -> float:
        """Distance between the polar of the sampled polar body and the unit sphere of N"""
        polar = self.polar_boundary(norm, resolution)
        theta = 2.0 * np.pi * np.arange(len(polar)) / len(polar)
        directions = np.column_stack([np.cos(theta), np.sin(theta)])
        support = np.max(directions @ polar.T, axis=1)
        bipolar = directions / support[:, None]
        return float(np.max(np.linalg.norm(bipolar - norm.unit_sphere_point(directions), axis=1)))

    def dual_loop(self, norm: NormOracle, lambda_init: np.ndarray, clockwise: bool,
                  resolution: Optional[int] = None) -> np.ndarray:
        """One turn around the dual sphere starting and ending at lambda(0)"""
        polar = self.polar_boundary(norm, resolution or self.geodesic_resolution)
        start = float(np.arctan2(lambda_init[1], lambda_init[0]))
        offsets = np.mod(np.arctan2(polar[:, 1], polar[:, 0]) - start, 2.0 * np.pi)
        usable = (offsets > 1e-13) & (offsets < 2.0 * np.pi - 1e-13)
        ordered = polar[usable][np.argsort(offsets[usable], kind='stable')]
        if clockwise:
            ordered = ordered[::-1]
        return np.vstack([lambda_init, ordered, lambda_init])

    def _projection_polyline(self, norm: NormOracle, k: float, lambda_init: np.ndarray,
                             length: float, resolution: Optional[int]):
        """Projection vertices and their cumulative N-length, tiled until `length` is covered"""
        z_loop, loop_arc = self._unit_loop(norm, lambda_init, k, resolution or self.geodesic_resolution)
        chords = np.diff(loop_arc)
        loop_length = float(loop_arc[-1])
        turns = max(1, int(math.ceil(length / loop_length + 1e-12)))
        z = np.vstack([z_loop] + [z_loop[1:]] * (turns - 1))
        arclength = np.concatenate([[0.0], np.cumsum(np.tile(chords, turns))])
        keep = np.concatenate([[True], np.diff(arclength) > 0])
        return z[keep], arclength[keep], loop_length

    def geodesic_from_isoperimetrix(self, norm: NormOracle, k: float, lambda_init: Sequence[float],
                                    arc: Tuple[float, float] = (0.0, 1.0), samples: Optional[int] = None,
                                    resolution: Optional[int] = None) -> SampledCurve:
        """Unit-speed H^1 geodesic on `arc` whose projection is a scaled isoperimetrix arc"""
        _require_planar(norm)
        if not norm.flags.strictly_convex:
            raise NotStrictlyConvexError(f"{norm!r} is not strictly convex")
        if k == 0:
            raise ValidationError("k must be nonzero; k = 0 extremals are straight lines", field='k')
        s0, s1 = float(arc[0]), float(arc[1])
        if s0 < 0 or not s1 > s0 or not math.isfinite(s1):
            raise AdmissibleRangeError(f"arc must satisfy 0 <= s0 < s1, got [{s0}, {s1}]", field='arc')
        multiplier = Multiplier(lambda_init, k, 1.0)
        multiplier.validate(norm, config.integrator_config['multiplier_tolerance'])

        samples = samples or self.geodesic_resolution
        z_poly, arclength, _ = self._projection_polyline(norm, k, multiplier.lambda_init, s1, resolution)
        h = (s1 - s0) / samples
        head = np.linspace(0.0, s0, int(math.ceil(s0 / h)) + 1)[:-1] if s0 > 0 else np.empty(0)
        s_full = np.concatenate([head, np.linspace(s0, s1, samples + 1)])
        z_full = np.column_stack([np.interp(s_full, arclength, z_poly[:, j]) for j in range(2)])
        t_full = lift_heights(z_full, 0.0)
        start = head.size
        logger.debug("Isoperimetrix geodesic k=%.6g on [%.6g, %.6g] with %d samples", k, s0, s1, samples)
        return SampledCurve(s_full[start:], z_full[start:], t_full[start:])

    def arc_endpoint(self, norm: NormOracle, k: float, lambda_init: np.ndarray, T: float,
                     resolution: Optional[int] = None) -> GroupPoint:
        """gamma(T) of the isoperimetrix geodesic, lifted along the fine polyline"""
        z_poly, arclength, _ = self._projection_polyline(norm, k, lambda_init, T, resolution)
        cut = int(np.searchsorted(arclength, T))
        z_end = np.array([np.interp(T, arclength, z_poly[:, j]) for j in range(2)])
        path = np.vstack([z_poly[:cut], z_end])
        return GroupPoint(z_end, float(lift_heights(path, 0.0)[-1]))

    def _unit_loop(self, norm: NormOracle, lam: np.ndarray, k: float, resolution: int):
        loop = self.dual_loop(norm, lam, clockwise=k < 0, resolution=resolution)
        z_loop = apply_j(loop - lam) / (4.0 * k)
        arclength = np.concatenate([[0.0], np.cumsum(norm.evaluate(np.diff(z_loop, axis=0)))])
        return z_loop, arclength

    def initial_guesses(self, norm: NormOracle, target: GroupPoint, angles: Optional[int] = None,
                        count: int = 4, resolution: int = 512) -> List[Tuple[Multiplier, float]]:
        """Shooting seeds (multiplier, T) from isoperimetrix arcs through the target projection"""
        _require_planar(norm)
        angles = angles or config.shooting_config['iso_angles']
        theta = 2.0 * np.pi * np.arange(angles) / angles
        covectors = np.column_stack([np.cos(theta), np.sin(theta)])
        covectors /= np.asarray(norm.dual_evaluate(covectors))[:, None]
        scale = max(float(np.linalg.norm(target.z)), math.sqrt(abs(target.t)), 1e-12)
        candidates = []
        if np.linalg.norm(target.z) <= 1e-12 * scale:
            # vertical target: one full turn, whose height scales like sign(k) / k^2
            for lam in covectors:
                z_loop, arclength = self._unit_loop(norm, lam, 1.0, resolution)
                t_unit = float(lift_heights(z_loop, 0.0)[-1])
                if t_unit == 0:
                    continue
                k = math.copysign(math.sqrt(abs(t_unit) / abs(target.t)), target.t * t_unit)
                candidates.append((0.0, Multiplier(lam, k), float(arclength[-1]) / abs(k)))
        else:
            d = -apply_j(target.z)
            reach = 3.0 / float(norm.dual_evaluate(d))
            for lam in covectors:
                # the dual sphere meets the line lambda + mu d again at mu = 4k
                slope = float(dual_gradient_with_fallback(norm, lam[None, :])[0] @ d)
                if slope == 0:
                    continue
                inward = -math.copysign(1.0, slope)
                f = lambda mu: float(norm.dual_evaluate(lam + mu * d)) - 1.0
                lo, hi = inward * 1e-9 * reach, inward * reach
                if f(lo) >= 0 or f(hi) <= 0:
                    continue
                mu = brentq(f, min(lo, hi), max(lo, hi), xtol=1e-14)
                k = mu / 4.0
                z_loop, arclength = self._unit_loop(norm, lam, k, resolution)
                nearest = int(np.argmin(np.linalg.norm(z_loop[1:-1] - target.z, axis=1)))
                path = np.vstack([z_loop[:nearest + 1], target.z])
                T = float(arclength[nearest] + norm.evaluate(target.z - z_loop[nearest]))
                t_end = float(lift_heights(path, 0.0)[-1])
                candidates.append((abs(t_end - target.t) / scale ** 2, Multiplier(lam, k), T))
        candidates.sort(key=lambda item: item[0])
        logger.debug("Isoperimetrix seeds: %d candidates, best score %s",
                     len(candidates), candidates[0][0] if candidates else None)
        return [(m, T) for _, m, T in candidates[:count]]


_default_service: Optional[IsoperimetrixService] = None


def _service() -> IsoperimetrixService:
    global _default_service
    if _default_service is None:
        _default_service = IsoperimetrixService()
    return _default_service


def polar_body(norm: NormOracle, resolution: Optional[int] = None) -> PlanarConvexBody:
    return _service().polar_body(norm, resolution)


def isoperimetrix_curve(norm: NormOracle, resolution: Optional[int] = None) -> PlanarConvexBody:
    return _service().isoperimetrix_curve(norm, resolution)


def geodesic_from_isoperimetrix(norm: NormOracle, k: float, lambda_init: Sequence[float],
                                arc: Tuple[float, float] = (0.0, 1.0), samples: Optional[int] = None) -> SampledCurve:
    return _service().geodesic_from_isoperimetrix(norm, k, lambda_init, arc, samples)


def bipolar_error(norm: NormOracle, resolution: Optional[int] = None) -> float:
    return _service().bipolar_error(norm, resolution)


def isoperimetrix_initial_guesses(norm: NormOracle, target: GroupPoint, **kwargs) -> List[Tuple[Multiplier, float]]:
    return _service().initial_guesses(norm, target, **kwargs)
