"""
Convex norms on R^{2n}: evaluation, subdifferentials, dual norms, Legendre
transforms of F_N = N^2/2 and convexity checks.

Builtin families carry closed forms and declared flags; `FunctionNorm` wraps
any positively homogeneous convex callable and measures its flags.
"""

import itertools
import json
import logging
import math
from functools import cached_property
from typing import Any, Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.spatial import ConvexHull, QhullError

from config import config
from core.exceptions import DimensionMismatchError, ValidationError
from models.data_models import ConvexSetApprox, NormFlags, ConvexityCheck, apply_j
from models.norm_interfaces import NormOracle

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


def sample_directions(dim: int, count: Optional[int] = None) -> np.ndarray:
    """Deterministic unit sample directions: an angular grid in 2D, +-basis plus a fixed cloud otherwise"""
    settings = config.convex_config
    if dim == 2:
        count = count or settings['directions_2d']
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    count = count or 2 * dim * settings['directions_per_dim']
    basis = np.vstack([np.eye(dim), -np.eye(dim)])
    cloud = np.random.default_rng(dim).standard_normal((max(count - 2 * dim, 0), dim))
    cloud /= np.linalg.norm(cloud, axis=1, keepdims=True)
    return np.vstack([basis, cloud])[:count]


def _angle_direction(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


def _fd_gradient(func: Callable[[np.ndarray], Any], x: np.ndarray, step: float) -> np.ndarray:
    """Central differences along the last axis with a step relative to |x|"""
    x = np.asarray(x, dtype=float)
    h = step * np.maximum(np.linalg.norm(x, axis=-1, keepdims=True), 1.0)
    grad = np.empty_like(x)
    for i in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[i] = 1.0
        grad[..., i] = (np.asarray(func(x + h * e)) - np.asarray(func(x - h * e))) / (2.0 * h[..., 0])
    return grad


def _dedupe(points: Iterable[np.ndarray], tol: float) -> np.ndarray:
    kept = []
    for point in points:
        if not any(np.linalg.norm(point - other) <= tol for other in kept):
            kept.append(point)
    return np.array(kept)


def dual_maximizer(norm: NormOracle, p: np.ndarray) -> Tuple[float, np.ndarray]:
    """Maximize p.z over the unit sphere of N; returns (N*(p), maximizer)"""
    p = np.asarray(p, dtype=float).reshape(-1)
    if not np.any(p):
        return 0.0, np.zeros_like(p)
    settings = config.convex_config
    if norm.dim == 2:
        samples = settings['dual_coarse_samples']
        theta = 2.0 * np.pi * np.arange(samples) / samples
        u = np.column_stack([np.cos(theta), np.sin(theta)])
        values = (u @ p) / norm.evaluate(u)
        i = int(np.argmax(values))
        width = 2.0 * np.pi / samples

        def negative_ratio(angle):
            d = _angle_direction(angle)
            return -float(p @ d) / float(norm.evaluate(d))

        result = minimize_scalar(negative_ratio, bounds=(theta[i] - width, theta[i] + width),
                                 method='bounded', options={'xatol': settings['dual_refine_xatol']})
        best = _angle_direction(result.x) if -result.fun >= values[i] else u[i]
    else:
        candidates = np.vstack([p / np.linalg.norm(p), sample_directions(norm.dim)])
        values = (candidates @ p) / norm.evaluate(candidates)
        order = np.argsort(values)[::-1][:3]
        best, best_value = candidates[order[0]], values[order[0]]

        def negative_ratio(u):
            length = np.linalg.norm(u)
            if length == 0:
                return 0.0
            return -float(p @ u) / float(norm.evaluate(u))

        for idx in order:
            result = minimize(negative_ratio, candidates[idx], method='Nelder-Mead',
                              options={'xatol': 1e-12, 'fatol': 1e-15, 'maxiter': 4000})
            if -result.fun > best_value:
                best, best_value = result.x, -result.fun
    z = best / float(norm.evaluate(best))
    return float(p @ z), z


def dual_eval_generic(norm: NormOracle, p: np.ndarray) -> Union[float, np.ndarray]:
    """N*(p) by coarse angular sampling of the unit sphere plus local refinement"""
    p = np.asarray(p, dtype=float)
    flat = p.reshape(-1, norm.dim)
    values = np.array([dual_maximizer(norm, q)[0] for q in flat])
    if p.ndim == 1:
        return float(values[0])
    return values.reshape(p.shape[:-1])


def _lp_gradient(x: np.ndarray, r: float) -> np.ndarray:
    """grad ||x||_r for 1 < r < inf, NaN at 0"""
    x = np.asarray(x, dtype=float)
    scale = np.max(np.abs(x), axis=-1, keepdims=True)
    with np.errstate(invalid='ignore', divide='ignore'):
        y = x / scale
        weights = np.sign(y) * np.abs(y) ** (r - 1.0)
        return weights / np.linalg.norm(y, ord=r, axis=-1, keepdims=True) ** (r - 1.0)


def _max_norm_gradient(x: np.ndarray) -> np.ndarray:
    """grad ||x||_inf where the maximal coordinate is unique, NaN elsewhere"""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    top = np.max(a, axis=-1, keepdims=True)
    ties = a >= top * (1.0 - 1e-12)
    grad = np.where(ties, np.sign(x), 0.0)
    undefined = (np.sum(ties, axis=-1) != 1) | (top[..., 0] == 0)
    grad[undefined] = np.nan
    return grad


def _linear_set(point: np.ndarray) -> ConvexSetApprox:
    point = np.asarray(point, dtype=float)
    return ConvexSetApprox(lambda d: float(point @ np.asarray(d, dtype=float)), point[None, :], exact=True)


def _polytope_set(vertices: np.ndarray, exact: bool = True) -> ConvexSetApprox:
    vertices = np.atleast_2d(vertices)
    return ConvexSetApprox(lambda d: float(np.max(vertices @ np.asarray(d, dtype=float))), vertices, exact)


class BaseNorm(NormOracle):
    """
    Shared machinery for norms: generic dual, Danskin dual gradient and a
    numerical subdifferential from one-sided directional derivatives.
    """

    def __init__(self, dim: int, settings: Optional[Dict[str, Any]] = None):
        if dim < 2 or dim % 2:
            raise ValidationError(f"norms act on R^{{2n}}, got dimension {dim}", field='dim')
        self._dim = int(dim)
        self.config = settings or config.convex_config
        self.step = self.config.get('directional_step', 1e-7)

    @property
    def dim(self) -> int:
        return self._dim

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self._dim:
            raise DimensionMismatchError(f"expected vectors of length {self._dim}, got {x.shape[-1]}", field='dim')
        return x

    def dual_evaluate(self, p: np.ndarray) -> Union[float, np.ndarray]:
        return dual_eval_generic(self, self._check_dim(p))

    def dual_gradient(self, p: np.ndarray) -> np.ndarray:
        # Danskin: the gradient of N* is the maximizer on the unit sphere
        p = self._check_dim(p)
        flat = p.reshape(-1, self._dim)
        out = np.full(flat.shape, np.nan)
        for i, q in enumerate(flat):
            if np.any(q):
                out[i] = dual_maximizer(self, q)[1]
        return out.reshape(p.shape)

    def directional_derivative(self, z: np.ndarray, d: np.ndarray) -> float:
        """One-sided N'(z; d)"""
        z = np.asarray(z, dtype=float)
        h = self.step * max(float(np.linalg.norm(z)), 1e-300)
        return (float(self.evaluate(z + h * np.asarray(d, dtype=float))) - float(self.evaluate(z))) / h

    def _zero_subdifferential(self) -> ConvexSetApprox:
        directions = sample_directions(self._dim)
        witnesses = directions / np.asarray(self.dual_evaluate(directions))[:, None]
        return ConvexSetApprox(lambda d: float(self.evaluate(np.asarray(d, dtype=float))), witnesses, exact=True)

    def subdifferential(self, z: np.ndarray) -> ConvexSetApprox:
        z = self._check_dim(z).reshape(-1)
        if not np.any(z):
            return self._zero_subdifferential()
        value = float(self.evaluate(z))
        singleton_width = self.config.get('numerical_singleton_width', 1e-4)
        if self._dim == 2:
            # dN(z) lies on the line p.z = N(z): a segment across the normal e
            e = apply_j(z) / np.linalg.norm(z)
            base = value * z / float(z @ z)
            upper = self.directional_derivative(z, e)
            lower = self.directional_derivative(z, -e)
            if upper + lower < singleton_width:
                return _linear_set(base + 0.5 * (upper - lower) * e)
            return _polytope_set(np.array([base + upper * e, base - lower * e]), exact=False)
        eta = self.config.get('perturbation', 1e-4) * float(np.linalg.norm(z))
        candidates = [_fd_gradient(self.evaluate, z + eta * d, self.step) for d in sample_directions(self._dim)]
        witnesses = _dedupe(candidates, singleton_width)
        if len(witnesses) == 1:
            return _linear_set(witnesses[0])
        return ConvexSetApprox(lambda d: self.directional_derivative(z, d), witnesses, exact=False)


class PNorm(BaseNorm):
    """||z||_p on R^dim; p = inf is the max-norm"""

    exact_dual_gradient = True

    def __init__(self, dim: int = 2, p: Union[float, str] = 2.0, settings: Optional[Dict[str, Any]] = None):
        super().__init__(dim, settings)
        self.p = _parse_p(p)
        if self.p == 1.0:
            self.q = math.inf
        elif math.isinf(self.p):
            self.q = 1.0
        else:
            self.q = self.p / (self.p - 1.0)

    @property
    def flags(self) -> NormFlags:
        regular = 1.0 < self.p < math.inf
        return NormFlags(strictly_convex=regular, smooth=regular)

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self._check_dim(z), ord=self.p, axis=-1)

    def dual_evaluate(self, p: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self._check_dim(p), ord=self.q, axis=-1)

    def dual_gradient(self, p: np.ndarray) -> np.ndarray:
        p = self._check_dim(p)
        if math.isinf(self.q):
            return _max_norm_gradient(p)
        if self.q == 1.0:
            grad = np.sign(p)
            grad[np.any(p == 0, axis=-1)] = np.nan
            return grad
        return _lp_gradient(p, self.q)

    def gradient(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        if self.flags.smooth:
            return _lp_gradient(z, self.p)
        return super().gradient(z)

    def subgradient(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        if self.flags.smooth:
            return np.nan_to_num(_lp_gradient(z, self.p))
        if self.p == 1.0:
            return np.sign(z)
        a = np.abs(z)
        out = np.zeros_like(z)
        top = np.argmax(a, axis=-1)[..., None]
        np.put_along_axis(out, top, np.sign(np.take_along_axis(z, top, axis=-1)), axis=-1)
        return out

    def subdifferential(self, z: np.ndarray) -> ConvexSetApprox:
        z = self._check_dim(z).reshape(-1)
        if not np.any(z):
            return self._zero_subdifferential()
        if 1.0 < self.p < math.inf:
            return _linear_set(_lp_gradient(z, self.p))
        a = np.abs(z)
        top = float(np.max(a))
        if self.p == 1.0:
            free = np.flatnonzero(a <= 1e-12 * top)
            fixed = np.sign(z)
            fixed[free] = 0.0
            witnesses = []
            for signs in itertools.product((-1.0, 1.0), repeat=len(free)):
                w = fixed.copy()
                w[free] = signs
                witnesses.append(w)
            witnesses = np.array(witnesses)

            def support(d, fixed=fixed, free=free):
                d = np.asarray(d, dtype=float)
                return float(fixed @ d + np.sum(np.abs(d[free])))

            return ConvexSetApprox(support, witnesses, exact=True)
        active = np.flatnonzero(a >= top * (1.0 - 1e-12))
        witnesses = np.zeros((len(active), self._dim))
        witnesses[np.arange(len(active)), active] = np.sign(z[active])
        return _polytope_set(witnesses)

    def descriptor(self) -> Dict[str, Any]:
        return {'family': 'pnorm', 'p': 'inf' if math.isinf(self.p) else self.p, 'dim': self._dim}


class Example52Norm(BaseNorm):
    """
    N(x, y) = |x| + sqrt(2x^2 + y^2) on R^2.

    Strictly convex but not smooth: the unit ball is bounded by two circle
    arcs meeting at (0, +-1). Its dual is C^1 and the closed-form gradient is
    reported as undefined on the diagonals |x| = |y| where the two formulas meet.
    """

    exact_dual_gradient = True

    def __init__(self, settings: Optional[Dict[str, Any]] = None):
        super().__init__(2, settings)

    @property
    def flags(self) -> NormFlags:
        return NormFlags(strictly_convex=True, smooth=False)

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        x, y = z[..., 0], z[..., 1]
        return np.abs(x) + np.sqrt(2.0 * x * x + y * y)

    def dual_evaluate(self, p: np.ndarray) -> np.ndarray:
        p = self._check_dim(p)
        x, y = p[..., 0], p[..., 1]
        ax, ay = np.abs(x), np.abs(y)
        return np.where(ax >= ay, -ax + SQRT2 * np.hypot(x, y), ay)

    def dual_gradient(self, p: np.ndarray) -> np.ndarray:
        p = self._check_dim(p)
        x, y = p[..., 0], p[..., 1]
        ax, ay = np.abs(x), np.abs(y)
        r = np.hypot(x, y)
        with np.errstate(invalid='ignore', divide='ignore'):
            wide = np.stack([-np.sign(x) + SQRT2 * x / r, SQRT2 * y / r], axis=-1)
        tall = np.stack([np.zeros_like(y), np.sign(y)], axis=-1)
        grad = np.where((ax > ay)[..., None], wide, tall)
        grad[ax == ay] = np.nan
        return grad

    def _on_kink(self, z: np.ndarray) -> bool:
        return abs(z[0]) <= 1e-12 * abs(z[1])

    def gradient(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        x, y = z[..., 0], z[..., 1]
        r2 = np.sqrt(2.0 * x * x + y * y)
        with np.errstate(invalid='ignore', divide='ignore'):
            grad = np.stack([np.sign(x) + 2.0 * x / r2, y / r2], axis=-1)
        grad[np.abs(x) <= 1e-12 * np.abs(y)] = np.nan
        return grad

    def subgradient(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        x, y = z[..., 0], z[..., 1]
        r2 = np.sqrt(2.0 * x * x + y * y)
        with np.errstate(invalid='ignore', divide='ignore'):
            grad = np.stack([np.sign(x) + 2.0 * x / r2, y / r2], axis=-1)
        # on the kink x = 0 this is (0, sgn y), the midpoint of the two one-sided gradients
        return np.nan_to_num(grad)

    def subdifferential(self, z: np.ndarray) -> ConvexSetApprox:
        z = self._check_dim(z).reshape(-1)
        if not np.any(z):
            return self._zero_subdifferential()
        if not self._on_kink(z):
            return _linear_set(self.gradient(z))
        top = np.array([0.0, math.copysign(1.0, z[1])])
        witnesses = np.array([top + [-1.0, 0.0], top + [1.0, 0.0]])

        def support(d):
            d = np.asarray(d, dtype=float)
            return float(abs(d[0]) + top @ d)

        return ConvexSetApprox(support, witnesses, exact=True)

    def descriptor(self) -> Dict[str, Any]:
        return {'family': 'example52'}


class PolygonNorm(BaseNorm):
    """Norm whose unit ball is the symmetric convex polytope spanned by +-vertices"""

    exact_dual_gradient = True

    def __init__(self, vertices, settings: Optional[Dict[str, Any]] = None):
        given = np.atleast_2d(np.asarray(vertices, dtype=float))
        super().__init__(given.shape[1], settings)
        points = np.vstack([given, -given])
        try:
            hull = ConvexHull(points)
        except QhullError as exc:
            raise ValidationError(f"vertices do not span a full-dimensional polytope: {exc}", field='vertices') from exc
        normals, offsets = hull.equations[:, :-1], hull.equations[:, -1]
        if np.any(offsets >= -1e-12):
            raise ValidationError("origin must lie in the interior of the polytope", field='vertices')
        self.facets = np.unique(np.round(normals / (-offsets)[:, None], 12), axis=0)
        self.vertices = points[hull.vertices]
        self._given = given

    @property
    def flags(self) -> NormFlags:
        return NormFlags(strictly_convex=False, smooth=False)

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return np.max(self._check_dim(z) @ self.facets.T, axis=-1)

    def dual_evaluate(self, p: np.ndarray) -> np.ndarray:
        return np.max(self._check_dim(p) @ self.vertices.T, axis=-1)

    def dual_gradient(self, p: np.ndarray) -> np.ndarray:
        p = self._check_dim(p)
        scores = p @ self.vertices.T
        top = np.max(scores, axis=-1, keepdims=True)
        ties = scores >= top - 1e-12 * np.maximum(np.abs(top), 1.0)
        grad = self.vertices[np.argmax(scores, axis=-1)]
        grad[(np.sum(ties, axis=-1) != 1) | ~np.any(p, axis=-1)] = np.nan
        return grad

    def subgradient(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        out = self.facets[np.argmax(z @ self.facets.T, axis=-1)]
        out[~np.any(z, axis=-1)] = 0.0
        return out

    def subdifferential(self, z: np.ndarray) -> ConvexSetApprox:
        z = self._check_dim(z).reshape(-1)
        if not np.any(z):
            return self._zero_subdifferential()
        scores = self.facets @ z
        top = float(np.max(scores))
        return _polytope_set(self.facets[scores >= top - 1e-12 * max(abs(top), 1.0)])

    def descriptor(self) -> Dict[str, Any]:
        return {'family': 'polygon', 'vertices': self._given.tolist()}


class LinearImageNorm(BaseNorm):
    """N(z) = N0(Az) for an invertible A; dual N0*(A^{-T} p)"""

    def __init__(self, base: NormOracle, matrix, settings: Optional[Dict[str, Any]] = None):
        super().__init__(base.dim, settings)
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (base.dim, base.dim):
            raise ValidationError(f"matrix must be {base.dim}x{base.dim}, got {matrix.shape}", field='matrix')
        if not np.isfinite(np.linalg.cond(matrix)) or np.linalg.cond(matrix) > 1e12:
            raise ValidationError("matrix must be invertible", field='matrix')
        self.base = base
        self.matrix = matrix
        self.inverse = np.linalg.inv(matrix)
        self.exact_dual_gradient = base.exact_dual_gradient

    @property
    def flags(self) -> NormFlags:
        return self.base.flags

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return self.base.evaluate(self._check_dim(z) @ self.matrix.T)

    def dual_evaluate(self, p: np.ndarray) -> np.ndarray:
        return self.base.dual_evaluate(self._check_dim(p) @ self.inverse)

    def dual_gradient(self, p: np.ndarray) -> np.ndarray:
        return self.base.dual_gradient(self._check_dim(p) @ self.inverse) @ self.inverse.T

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return self.base.gradient(self._check_dim(z) @ self.matrix.T) @ self.matrix

    def subgradient(self, z: np.ndarray) -> np.ndarray:
        return self.base.subgradient(self._check_dim(z) @ self.matrix.T) @ self.matrix

    def subdifferential(self, z: np.ndarray) -> ConvexSetApprox:
        z = self._check_dim(z).reshape(-1)
        inner = self.base.subdifferential(self.matrix @ z)
        matrix = self.matrix
        return ConvexSetApprox(lambda d: inner.support(matrix @ np.asarray(d, dtype=float)),
                               inner.witnesses @ matrix, inner.exact)

    def descriptor(self) -> Dict[str, Any]:
        return {'family': 'linear', 'base': self.base.descriptor(), 'matrix': self.matrix.tolist()}


class FunctionNorm(BaseNorm):
    """Norm given by a positively homogeneous convex callable on single vectors"""

    def __init__(self, func: Callable[[np.ndarray], float], dim: int = 2,
                 flags: Optional[NormFlags] = None, settings: Optional[Dict[str, Any]] = None):
        super().__init__(dim, settings)
        self.func = func
        self._declared_flags = flags
        directions = sample_directions(dim)
        values = self.evaluate(directions)
        if np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise ValidationError("function must be positive away from the origin", field='func')
        if np.max(np.abs(self.evaluate(-directions) - values)) > 1e-9 * np.max(values):
            raise ValidationError("function must be symmetric: N(-z) = N(z)", field='func')

    @cached_property
    def _measured_flags(self) -> NormFlags:
        strict = check_strict_convexity(self).ok
        smooth = check_smoothness(self).ok
        logger.debug("Measured flags for custom norm: strictly_convex=%s smooth=%s", strict, smooth)
        return NormFlags(strictly_convex=strict, smooth=smooth, measured=True)

    @property
    def flags(self) -> NormFlags:
        return self._declared_flags or self._measured_flags

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        if z.ndim == 1:
            return np.float64(self.func(z))
        return np.apply_along_axis(lambda row: float(self.func(row)), -1, z)

    def descriptor(self) -> Dict[str, Any]:
        return {'family': 'function', 'dim': self._dim}


class SquaredNormFunctional:
    """F_N = N^2/2 with conjugate F_N* = N*^2/2 and dF_N = N dN"""

    def __init__(self, base: NormOracle):
        self.base = base

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return self.base.squared(z)

    def conjugate(self, p: np.ndarray) -> np.ndarray:
        return legendre_of_squared(self.base, p)

    def subdifferential(self, z: np.ndarray) -> ConvexSetApprox:
        return subdiff_of_squared(self.base, z)

    def fenchel_residual(self, z: np.ndarray, p: np.ndarray):
        return fenchel_residual(self.base, z, p)


def _parse_p(value: Union[float, str]) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ('inf', 'infinity', '+inf'):
            return math.inf
        try:
            value = float(value)
        except ValueError as exc:
            raise ValidationError(f"p must be a number or 'inf', got {value!r}", field='p') from exc
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"p must be a number or 'inf', got {value!r}", field='p')
    value = float(value)
    if math.isnan(value) or value < 1.0:
        raise ValidationError(f"p must lie in [1, inf], got {value}", field='p')
    return value


def make_pnorm(n: int, p: Union[float, str]) -> PNorm:
    """||.||_p on R^{2n}"""
    if n < 1:
        raise ValidationError("group dimension must be >= 1", field='n')
    return PNorm(2 * n, p)


def make_example52() -> Example52Norm:
    return Example52Norm()


def make_polygon(vertices) -> PolygonNorm:
    return PolygonNorm(vertices)


def regular_polygon_vertices(count: int, radius: float = 1.0, phase: float = 0.0) -> np.ndarray:
    theta = phase + 2.0 * np.pi * np.arange(count) / count
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


def legendre_of_squared(norm: NormOracle, p: np.ndarray):
    """F_N*(p) = N*(p)^2 / 2"""
    return norm.dual_squared(p)


def legendre_sup(norm: NormOracle, p: np.ndarray, directions: Optional[np.ndarray] = None) -> float:
    """sup_z (p.z - N(z)^2/2) reduced to rays: max_u max(p.u, 0)^2 / (2 N(u)^2)"""
    p = np.asarray(p, dtype=float).reshape(-1)
    if directions is None:
        directions = sample_directions(norm.dim, 4096 if norm.dim == 2 else 2 * norm.dim * 256)
    along = np.maximum(directions @ p, 0.0)
    return float(np.max(along ** 2 / (2.0 * norm.evaluate(directions) ** 2)))


def subdiff_of_squared(norm: NormOracle, z: np.ndarray) -> ConvexSetApprox:
    """dF_N(z) = N(z) dN(z), and {0} at the origin"""
    z = np.asarray(z, dtype=float).reshape(-1)
    if not np.any(z):
        return _linear_set(np.zeros(norm.dim))
    return norm.subdifferential(z).scaled(float(norm.evaluate(z)))


def fenchel_residual(norm: NormOracle, z: np.ndarray, p: np.ndarray):
    """|F_N(z) + F_N*(p) - z.p|, zero exactly when p lies in dF_N(z)"""
    z = np.asarray(z, dtype=float)
    p = np.asarray(p, dtype=float)
    residual = np.abs(norm.squared(z) + norm.dual_squared(p) - np.sum(z * p, axis=-1))
    if residual.ndim == 0:
        return float(residual)
    return residual


def check_strict_convexity(norm: NormOracle, trials: Optional[int] = None,
                           rng: Optional[np.random.Generator] = None) -> ConvexityCheck:
    """Look for pairs on the unit sphere whose midpoint is not pinched inside the ball.

    A pair z1, z2 at distance d passes when N((z1+z2)/2) < 1 - eps(d) with
    eps(d) = floor + quadratic * d^2.
    """
    settings = config.convex_config
    trials = settings['convexity_trials'] if trials is None else trials
    if trials < 1:
        raise ValidationError("at least one trial is required", field='trials')
    rng = rng or np.random.default_rng(config.seed)
    dim = norm.dim
    first, second = [], []
    if dim == 2:
        grid = norm.unit_sphere_point(sample_directions(2, 4 * settings['directions_2d']))
        for gap in (1, 2, 4, 8, 16):
            first.append(grid)
            second.append(np.roll(grid, -gap, axis=0))
    else:
        grid = norm.unit_sphere_point(sample_directions(dim))
        i, j = np.triu_indices(len(grid), k=1)
        first.append(grid[i])
        second.append(grid[j])
    first.append(norm.unit_sphere_point(rng.standard_normal((trials, dim))))
    second.append(norm.unit_sphere_point(rng.standard_normal((trials, dim))))
    a, b = np.vstack(first), np.vstack(second)
    distance = np.linalg.norm(a - b, axis=1)
    keep = distance >= settings['convexity_min_separation']
    a, b, distance = a[keep], b[keep], distance[keep]
    midpoint = norm.evaluate(0.5 * (a + b))
    pinch = settings['pinch_floor'] + settings['pinch_quadratic'] * distance ** 2
    margin = midpoint - (1.0 - pinch)
    worst = int(np.argmax(margin))
    ok = bool(margin[worst] < 0)
    witness = None if ok else (a[worst].copy(), b[worst].copy())
    if not ok:
        logger.debug("Flat pair on the unit sphere: %s, %s (margin %.3e)", witness[0], witness[1], margin[worst])
    return ConvexityCheck(ok=ok, witness=witness, worst_margin=float(margin[worst]), pairs_tested=int(len(margin)))


def check_smoothness(norm: NormOracle, trials: Optional[int] = None,
                     rng: Optional[np.random.Generator] = None) -> ConvexityCheck:
    """N is smooth on the sample set iff every dN(z) there is a singleton"""
    settings = config.convex_config
    trials = settings['convexity_trials'] if trials is None else trials
    rng = rng or np.random.default_rng(config.seed)
    directions = sample_directions(norm.dim)
    points = np.vstack([directions, rng.standard_normal((trials, norm.dim))])
    worst_width, witness = -math.inf, None
    for z in points:
        sub = norm.subdifferential(z)
        tol = settings['singleton_width'] if sub.exact else settings['numerical_singleton_width']
        width = sub.width(directions) - tol
        if width > worst_width:
            worst_width, witness = width, (z.copy(),)
    ok = bool(worst_width <= 0)
    return ConvexityCheck(ok=ok, witness=None if ok else witness, worst_margin=float(worst_width),
                       pairs_tested=len(points))


def random_strictly_convex_norm(rng: np.random.Generator, dim: int = 2) -> LinearImageNorm:
    """||M z||_p with p in [1.2, 3] and M a random rotation with stretches in [0.5, 2]"""
    p = float(rng.uniform(1.2, 3.0))
    rotation, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    stretch = np.diag(rng.uniform(0.5, 2.0, size=dim))
    return LinearImageNorm(PNorm(dim, p), stretch @ rotation)


_DESCRIPTOR_FIELDS = {
    'pnorm': ({'family', 'p'}, {'dim'}),
    'example52': ({'family'}, set()),
    'polygon': ({'family', 'vertices'}, set()),
    'linear': ({'family', 'base', 'matrix'}, set()),
}


def norm_from_descriptor(descriptor: Union[str, Dict[str, Any]]) -> NormOracle:
    """Build a norm from its JSON descriptor, rejecting unknown fields"""
    if isinstance(descriptor, str):
        try:
            descriptor = json.loads(descriptor)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"norm descriptor is not valid JSON: {exc.msg}", field='norm') from exc
    if not isinstance(descriptor, dict):
        raise ValidationError("norm descriptor must be a JSON object", field='norm')
    family = descriptor.get('family')
    if family is None:
        raise ValidationError("missing norm family", field='family')
    if family not in _DESCRIPTOR_FIELDS:
        raise ValidationError(f"unknown norm family {family!r}", field='family')
    required, optional = _DESCRIPTOR_FIELDS[family]
    for key in descriptor:
        if key not in required | optional:
            raise ValidationError(f"unknown field {key!r} for norm family {family!r}", field=key)
    for key in sorted(required - set(descriptor)):
        raise ValidationError(f"missing field {key!r} for norm family {family!r}", field=key)

    if family == 'pnorm':
        dim = descriptor.get('dim', 2)
        if isinstance(dim, bool) or not isinstance(dim, int):
            raise ValidationError(f"dim must be an even integer, got {dim!r}", field='dim')
        return PNorm(dim, descriptor['p'])
    if family == 'example52':
        return Example52Norm()
    if family == 'polygon':
        try:
            vertices = np.asarray(descriptor['vertices'], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError("vertices must be a list of coordinate lists", field='vertices') from exc
        if vertices.ndim != 2:
            raise ValidationError("vertices must be a list of coordinate lists", field='vertices')
        return make_polygon(vertices)
    try:
        matrix = np.asarray(descriptor['matrix'], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError("matrix must be a list of rows", field='matrix') from exc
    return LinearImageNorm(norm_from_descriptor(descriptor['base']), matrix)
