"""
Core Data Models for the sub-Finsler geodesics toolkit

This module contains the data models and enums shared by the Heisenberg
arithmetic, the convex-analysis layer, the Pontryagin integrator, the
boundary-value solvers and the experiment reports.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple
from enum import Enum
import math

import numpy as np

from core.exceptions import DimensionMismatchError, MultiplierError, ValidationError


def serialize_for_json(obj):
    """Helper function to serialize numpy-heavy objects for JSON"""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, Enum):
        return obj.value
    elif isinstance(obj, dict):
        return {str(k): serialize_for_json(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [serialize_for_json(item) for item in obj]
    elif isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ('inf' if obj > 0 else '-inf')
    else:
        return obj


def apply_j(z: np.ndarray) -> np.ndarray:
    """J_n applied along the last axis without forming the matrix"""
    z = np.asarray(z, dtype=float)
    n = z.shape[-1] // 2
    return np.concatenate([-z[..., n:], z[..., :n]], axis=-1)


def omega(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """<z, J_n w> along the last axis, J_n = [[0, -I], [I, 0]]"""
    return np.sum(np.asarray(z, dtype=float) * apply_j(w), axis=-1)


# Enums for type safety and consistency
class NormFamily(Enum):
    PNORM = "pnorm"
    EXAMPLE52 = "example52"
    POLYGON = "polygon"
    LINEAR = "linear"
    FUNCTION = "function"


class ShootingMode(Enum):
    FIXED_T = "fixed-T"
    UNIT_SPEED = "unit-speed"


class Subcommand(Enum):
    GEODESIC = "geodesic"
    INTEGRATE = "integrate"
    ISOPERIMETRIX = "isoperimetrix"
    GLP = "glp"
    BLOWDOWN = "blowdown"
    VERIFY_EXAMPLE52 = "verify-example52"
    DIST = "dist"


# Heisenberg group models
@dataclass
class GroupPoint:
    """Element (z, t) of H^n with z = (x_1..x_n, y_1..y_n)"""
    z: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.z = np.array(self.z, dtype=float).reshape(-1)
        self.t = float(self.t)
        if self.z.size == 0 or self.z.size % 2:
            raise ValidationError(f"z must have even positive length, got {self.z.size}", field='z')
        if not (np.all(np.isfinite(self.z)) and math.isfinite(self.t)):
            raise ValidationError("group point entries must be finite", field='z')

    @property
    def n(self) -> int:
        return self.z.size // 2

    def as_vector(self) -> np.ndarray:
        return np.append(self.z, self.t)

    def to_dict(self) -> Dict[str, Any]:
        return {'z': self.z.tolist(), 't': self.t}


@dataclass
class SampledCurve:
    """Discretized curve in H^n on a strictly increasing parameter grid"""
    s_grid: np.ndarray
    z: np.ndarray
    t: np.ndarray
    horizontality_residual: float = field(init=False)

    def __post_init__(self):
        self.s_grid = np.array(self.s_grid, dtype=float).reshape(-1)
        self.z = np.array(self.z, dtype=float)
        if self.z.ndim == 1:
            self.z = self.z.reshape(-1, 1)
        self.t = np.array(self.t, dtype=float).reshape(-1)
        if self.s_grid.size < 2:
            raise ValidationError("a sampled curve needs at least 2 samples", field='s_grid')
        if np.any(np.diff(self.s_grid) <= 0):
            raise ValidationError("s_grid must be strictly increasing", field='s_grid')
        if self.z.shape[0] != self.s_grid.size or self.t.size != self.s_grid.size:
            raise ValidationError("points and s_grid must have equal length", field='points')
        if self.z.shape[1] % 2:
            raise ValidationError("z must have even width 2n", field='z')
        self.horizontality_residual = float(np.max(np.abs(self.t - lift_heights(self.z, self.t[0]))))

    @property
    def n(self) -> int:
        return self.z.shape[1] // 2

    @property
    def size(self) -> int:
        return self.s_grid.size

    @property
    def points(self) -> List[GroupPoint]:
        return [GroupPoint(z, t) for z, t in zip(self.z, self.t)]

    @property
    def start(self) -> GroupPoint:
        return GroupPoint(self.z[0], self.t[0])

    @property
    def end(self) -> GroupPoint:
        return GroupPoint(self.z[-1], self.t[-1])

    def diameter(self) -> float:
        """Euclidean diameter of the sample set in R^{2n+1} (bounding box diagonal)"""
        coords = np.column_stack([self.z, self.t])
        return float(np.linalg.norm(coords.max(axis=0) - coords.min(axis=0)))

    def to_dict(self) -> Dict[str, Any]:
        n = self.n
        names = [f'x{i + 1}' for i in range(n)] + [f'y{i + 1}' for i in range(n)]
        data: Dict[str, Any] = {'n': n, 's': self.s_grid.tolist()}
        for j, name in enumerate(names):
            data[name] = self.z[:, j].tolist()
        data['t'] = self.t.tolist()
        data['horizontality_residual'] = self.horizontality_residual
        return data


def lift_heights(z: np.ndarray, t0: float) -> np.ndarray:
    """Heights of the horizontal lift of the piecewise-linear path through z.

    The trapezoidal rule is exact on each linear piece, giving
    t_{j+1} - t_j = 2<z_j, J z_{j+1}>.
    """
    z = np.asarray(z, dtype=float)
    increments = 2.0 * omega(z[:-1], z[1:])
    return t0 + np.concatenate([[0.0], np.cumsum(increments)])


@dataclass
class HomogeneousNormDescriptor:
    """Parameters (p, a) of N_{p,a}(z, t) = max{||z||_p, a sqrt|t|} on H^n"""
    p: float
    a: float
    n: int = 1

    def __post_init__(self):
        if isinstance(self.p, str) and self.p.strip().lower() in ('inf', 'infinity'):
            self.p = math.inf
        try:
            self.p = float(self.p)
            self.a = float(self.a)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"p and a must be numbers, got p={self.p!r}, a={self.a!r}", field='p') from exc
        if self.n < 1:
            raise ValidationError("group dimension must be >= 1", field='n')
        if not self.p >= 1:
            raise ValidationError(f"p must lie in [1, inf], got {self.p}", field='p')
        if self.p <= 2:
            a_max = 1.0
        else:
            a_max = self.n ** (1.0 / self.p - 0.5)
        if not (0 < self.a <= a_max * (1 + 1e-12)):
            raise ValidationError(
                f"a must lie in (0, {a_max:.6g}] for p={self.p}, n={self.n}, got {self.a}", field='a')

    def to_dict(self) -> Dict[str, Any]:
        return {'p': 'inf' if math.isinf(self.p) else self.p, 'a': self.a, 'n': self.n}


# Convex analysis models
@dataclass
class NormFlags:
    """Convexity flags of a norm, declared for builtins and measured otherwise"""
    strictly_convex: bool
    smooth: bool
    measured: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {'strictly_convex': self.strictly_convex, 'smooth': self.smooth, 'measured': self.measured}


@dataclass
class ConvexSetApprox:
    """Compact convex set given by a support function plus extreme-point witnesses"""
    support: Callable[[np.ndarray], float]
    witnesses: np.ndarray
    exact: bool = False

    def __post_init__(self):
        self.witnesses = np.atleast_2d(np.asarray(self.witnesses, dtype=float))

    @property
    def dim(self) -> int:
        return self.witnesses.shape[1]

    @property
    def is_singleton(self) -> bool:
        return self.witnesses.shape[0] == 1

    def support_values(self, directions: np.ndarray) -> np.ndarray:
        return np.array([self.support(d) for d in np.atleast_2d(directions)])

    def scaled(self, factor: float) -> 'ConvexSetApprox':
        base = self.support
        if factor >= 0:
            support = lambda d: factor * base(d)
        else:
            support = lambda d: -factor * base(-np.asarray(d))
        return ConvexSetApprox(support, factor * self.witnesses, self.exact)

    def width(self, directions: np.ndarray) -> float:
        """max over directions of h(d) + h(-d): zero exactly for singletons"""
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        return float(np.max(self.support_values(directions) + self.support_values(-directions)))

    def contains(self, point: np.ndarray, directions: np.ndarray, tol: float = 1e-9) -> bool:
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        return bool(np.all(directions @ np.asarray(point, dtype=float) <= self.support_values(directions) + tol))

    def distance(self, other: 'ConvexSetApprox', directions: np.ndarray) -> float:
        """Lower bound of the Euclidean set distance from unit sample directions.

        dist(A, B) = max_{|d|<=1} (-h_B(-d) - h_A(d)); restricted to the samples
        the value never exceeds the true distance.
        """
        best = 0.0
        for d in np.atleast_2d(directions):
            d = d / np.linalg.norm(d)
            best = max(best, -other.support(-d) - self.support(d))
        return float(best)

    def translated(self, offset: np.ndarray) -> 'ConvexSetApprox':
        offset = np.asarray(offset, dtype=float)
        base = self.support
        return ConvexSetApprox(lambda d: base(d) + float(offset @ np.asarray(d, dtype=float)),
                               self.witnesses + offset, self.exact)

    def to_dict(self) -> Dict[str, Any]:
        return {'witnesses': self.witnesses.tolist(), 'exact': self.exact}


@dataclass
class ConvexityCheck:
    """Outcome of a convexity check; unpacks as (ok, witness)"""
    ok: bool
    witness: Optional[Tuple[np.ndarray, np.ndarray]] = None
    worst_margin: float = -math.inf
    pairs_tested: int = 0

    def __iter__(self):
        return iter((self.ok, self.witness))

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            'ok': self.ok,
            'witness': [w.tolist() for w in self.witness] if self.witness is not None else None,
            'worst_margin': self.worst_margin,
            'pairs_tested': self.pairs_tested
        }


# Pontryagin models
@dataclass
class Multiplier:
    """Normal Pontryagin data (lambda0, lambda(0), k = lambda_{2n+1}, speed R)"""
    lambda_init: np.ndarray
    k: float
    R: float = 1.0
    lambda0: int = 1

    def __post_init__(self):
        self.lambda_init = np.array(self.lambda_init, dtype=float).reshape(-1)
        self.k = float(self.k)
        self.R = float(self.R)
        if self.lambda0 not in (0, 1):
            raise MultiplierError("lambda0 must be 0 or 1", field='lambda0')
        if self.lambda0 == 0 and self.k == 0 and not np.any(self.lambda_init):
            raise MultiplierError("multiplier must be nontrivial", field='lambda_init')
        if not self.R > 0:
            raise MultiplierError(f"speed R must be positive, got {self.R}", field='R')
        if self.lambda_init.size % 2:
            raise DimensionMismatchError("lambda(0) must have length 2n", field='lambda_init')

    @property
    def n(self) -> int:
        return self.lambda_init.size // 2

    def validate(self, norm, tol: float = 1e-8) -> None:
        """Check normality and N*(lambda(0)) = R against a norm oracle"""
        if self.lambda0 != 1:
            raise MultiplierError("abnormal multipliers carry no optimal controls", field='lambda0')
        if self.lambda_init.size != norm.dim:
            raise DimensionMismatchError(
                f"lambda(0) has length {self.lambda_init.size}, norm acts on R^{norm.dim}", field='lambda_init')
        dual = float(norm.dual_evaluate(self.lambda_init))
        if abs(dual - self.R) > tol * max(1.0, self.R):
            raise MultiplierError(f"N*(lambda(0)) = {dual!r} differs from R = {self.R!r}", field='lambda_init')

    def to_dict(self) -> Dict[str, Any]:
        return {'lambda0': self.lambda0, 'lambda_init': self.lambda_init.tolist(), 'k': self.k, 'R': self.R}


@dataclass
class TraceDiagnostics:
    """Deviation of a trace from the constancy relations of normal extremals"""
    speed_dev: float
    dual_dev: float
    hamiltonian_dev: float
    pairing_dev: float
    hamiltonian_constant: float = 0.0

    def worst(self) -> float:
        return max(self.speed_dev, self.dual_dev, self.hamiltonian_dev, self.pairing_dev)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'speed_dev': self.speed_dev,
            'dual_dev': self.dual_dev,
            'hamiltonian_dev': self.hamiltonian_dev,
            'pairing_dev': self.pairing_dev,
            'hamiltonian_constant': self.hamiltonian_constant
        }


@dataclass
class ExtremalTrace:
    """A sampled curve with costate a(s), controls v(s) = -gamma_I'(s) and diagnostics"""
    curve: SampledCurve
    a_samples: np.ndarray
    v_samples: np.ndarray
    diagnostics: TraceDiagnostics
    multiplier: Optional[Multiplier] = None

    def __post_init__(self):
        self.a_samples = np.asarray(self.a_samples, dtype=float)
        self.v_samples = np.asarray(self.v_samples, dtype=float)
        if self.a_samples.shape != self.curve.z.shape or self.v_samples.shape != self.curve.z.shape:
            raise DimensionMismatchError("a and v samples must match the curve grid", field='a_samples')

    @property
    def s_grid(self) -> np.ndarray:
        return self.curve.s_grid

    @property
    def T(self) -> float:
        return float(self.curve.s_grid[-1] - self.curve.s_grid[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'curve': self.curve.to_dict(),
            'a': self.a_samples.tolist(),
            'v': self.v_samples.tolist(),
            'diagnostics': self.diagnostics.to_dict(),
            'multiplier': self.multiplier.to_dict() if self.multiplier else None
        }


@dataclass
class CheckResult:
    """Outcome of one first-order condition over a trace"""
    name: str
    passed: bool
    worst_value: float
    worst_s: float
    tolerance: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'status': 'pass' if self.passed else 'fail',
            'worst_value': self.worst_value,
            'worst_s': self.worst_s,
            'tolerance': self.tolerance
        }


@dataclass
class ExtremalReport:
    """Pass/fail report of the Pontryagin conditions on a trace"""
    checks: Dict[str, CheckResult]
    hamiltonian_constant: float
    hamiltonian_matches_minus_half_r2: Optional[bool] = None
    control_selection_dev: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def failed(self) -> List[str]:
        return sorted(name for name, check in self.checks.items() if not check.passed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'status': 'pass' if self.passed else 'fail',
            'checks': {name: check.to_dict() for name, check in sorted(self.checks.items())},
            'hamiltonian_constant': self.hamiltonian_constant,
            'hamiltonian_matches_minus_half_r2': self.hamiltonian_matches_minus_half_r2,
            'control_selection_dev': self.control_selection_dev
        }


# Boundary-value models
@dataclass
class ShootingProblem:
    """Two-point problem: reach `target` from the identity"""
    norm: Any
    target: GroupPoint
    mode: ShootingMode = ShootingMode.UNIT_SPEED
    T: Optional[float] = None
    init_guess: Optional[Multiplier] = None
    init_T: Optional[float] = None

    def __post_init__(self):
        if not np.any(self.target.z) and self.target.t == 0.0:
            raise ValidationError("target must differ from the identity", field='target')
        if self.target.z.size != self.norm.dim:
            raise DimensionMismatchError("target dimension does not match the norm", field='target')
        if self.mode is ShootingMode.FIXED_T and not (self.T and self.T > 0):
            raise ValidationError("fixed-T mode needs a positive T", field='T')


@dataclass
class ShootingResult:
    """Converged extremal for a shooting problem plus ranked alternatives"""
    multiplier: Multiplier
    trace: 'ExtremalTrace'
    T: float
    residual: float
    group_residual: float
    cost: float
    iterations: int
    start: str = 'unknown'
    alternatives: List['ShootingResult'] = field(default_factory=list)

    def __iter__(self):
        # unpacks as (multiplier, trace)
        return iter((self.multiplier, self.trace))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'multiplier': self.multiplier.to_dict(),
            'T': self.T,
            'residual': self.residual,
            'group_residual': self.group_residual,
            'cost': self.cost,
            'iterations': self.iterations,
            'start': self.start,
            'trace': self.trace.to_dict(),
            'alternatives': [
                {'multiplier': alt.multiplier.to_dict(), 'T': alt.T, 'cost': alt.cost,
                 'residual': alt.residual, 'start': alt.start}
                for alt in self.alternatives
            ]
        }


@dataclass
class DirectProblem:
    """Piecewise-constant discretisation of inf int_0^T F_N(v) with endpoint penalty"""
    norm: Any
    target: GroupPoint
    T: float
    M: int = 256
    penalty: List[float] = field(default_factory=lambda: [1e1, 1e2, 1e3, 1e4, 1e5])

    def __post_init__(self):
        if self.M < 4:
            raise ValidationError("at least 4 control intervals are required", field='M')
        if not self.T > 0:
            raise ValidationError("T must be positive", field='T')
        if len(self.penalty) == 0 or np.any(np.diff(self.penalty) <= 0) or self.penalty[0] <= 0:
            raise ValidationError("penalty schedule must be positive and strictly increasing", field='penalty')


@dataclass
class DirectSolution:
    """Result of the direct method"""
    controls: np.ndarray
    curve: SampledCurve
    cost: float
    length: float
    endpoint_residual: float
    penalized_cost: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'controls': self.controls.tolist(),
            'cost': self.cost,
            'length': self.length,
            'endpoint_residual': self.endpoint_residual,
            'penalized_cost': self.penalized_cost
        }


@dataclass
class EquivalenceReport:
    """Cauchy-Schwarz chain (int N(v))^2 <= T int N(v)^2"""
    length: float
    energy: float
    T: float
    gap: float
    equal: bool

    def to_dict(self) -> Dict[str, Any]:
        return {'length': self.length, 'energy': self.energy, 'T': self.T, 'gap': self.gap, 'equal': self.equal}


# Isoperimetrix models
@dataclass
class PlanarConvexBody:
    """Closed counterclockwise polyline bounding a convex planar body"""
    boundary: np.ndarray
    support: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        self.boundary = np.asarray(self.boundary, dtype=float)
        if self.boundary.ndim != 2 or self.boundary.shape[1] != 2 or self.boundary.shape[0] < 3:
            raise ValidationError("boundary must be a (K>=3, 2) array", field='boundary')
        if self.support is None:
            pts = self.boundary
            self.support = lambda d: float(np.max(pts @ np.asarray(d, dtype=float)))

    def edge_cross_products(self) -> np.ndarray:
        edges = np.roll(self.boundary, -1, axis=0) - self.boundary
        nxt = np.roll(edges, -1, axis=0)
        return edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]

    def is_convex(self, tol: float = 1e-9) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.boundary)))) ** 2
        return bool(np.all(self.edge_cross_products() >= -tol * scale))

    def is_symmetric(self, tol: float = 1e-6) -> bool:
        directions = self.boundary / np.linalg.norm(self.boundary, axis=1, keepdims=True)
        return all(abs(self.support(d) - self.support(-d)) <= tol for d in directions)

    def to_dict(self) -> Dict[str, Any]:
        return {'x': self.boundary[:, 0].tolist(), 'y': self.boundary[:, 1].tolist()}


# Experiment models
@dataclass
class BlowDownReport:
    """Projection sups and geodesic proxies of gamma_k(s) = delta_{1/k} gamma(sk)"""
    k_values: List[int]
    projection_sups: List[float]
    geodesic_residuals: List[float]
    collapse_rate: Optional[float] = None

    def __post_init__(self):
        if not (len(self.k_values) == len(self.projection_sups) == len(self.geodesic_residuals)):
            raise ValidationError("blow-down lists must have equal length", field='k_values')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k_values': list(self.k_values),
            'projection_sups': list(self.projection_sups),
            'geodesic_residuals': list(self.geodesic_residuals),
            'collapse_rate': self.collapse_rate
        }


@dataclass
class BoundednessCertificate:
    """Explicit bound sup ||gamma_I|| <= C for an extremal with k != 0"""
    s0: float
    c: float
    k_lower: float
    C: float
    dual_diameter: float = 0.0

    def __post_init__(self):
        if not (self.c > 0 and self.k_lower > 0 and self.C > 0):
            raise ValidationError("certificate constants must be positive", field='c')

    def to_dict(self) -> Dict[str, Any]:
        return {'s0': self.s0, 'c': self.c, 'k_lower': self.k_lower, 'C': self.C,
                'dual_diameter': self.dual_diameter}


@dataclass
class GLPTrial:
    """One row of the empirical linearity table"""
    index: int
    multiplier: Multiplier
    bound: Optional[float]
    observed_sup: float
    line_deviation: Optional[float]
    bounded: Optional[bool]
    period: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'index': self.index,
            'multiplier': self.multiplier.to_dict(),
            'bound': self.bound,
            'observed_sup': self.observed_sup,
            'line_deviation': self.line_deviation,
            'bounded': self.bounded,
            'period': self.period
        }


@dataclass
class GLPReport:
    """Empirical linearity experiment over random multipliers"""
    norm: Dict[str, Any]
    horizon: float
    seed: int
    trials: List[GLPTrial]

    @property
    def passed(self) -> bool:
        for trial in self.trials:
            if trial.multiplier.k == 0:
                if trial.line_deviation is None or trial.line_deviation > 1e-8:
                    return False
            elif not trial.bounded:
                return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'norm': self.norm,
            'horizon': self.horizon,
            'seed': self.seed,
            'status': 'pass' if self.passed else 'fail',
            'trials': [trial.to_dict() for trial in self.trials]
        }


@dataclass
class CounterexampleResult:
    """Non-line infinite geodesic built from a flat face of the unit ball"""
    curve: SampledCurve
    face: Tuple[np.ndarray, np.ndarray]
    line_deviation: float
    subinterval_gaps: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.line_deviation > 1e-3 and all(gap <= 0.01 for gap in self.subinterval_gaps)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'face': [self.face[0].tolist(), self.face[1].tolist()],
            'line_deviation': self.line_deviation,
            'subinterval_gaps': list(self.subinterval_gaps),
            'status': 'pass' if self.passed else 'fail'
        }


@dataclass
class RunConfig:
    """Validated command-line run"""
    subcommand: Subcommand
    norm_descriptor: Optional[Dict[str, Any]] = None
    options: Dict[str, Any] = field(default_factory=dict)
    output: Optional[str] = None
    seed: int = 20240101

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subcommand': self.subcommand.value,
            'norm_descriptor': self.norm_descriptor,
            'options': serialize_for_json(self.options),
            'output': self.output,
            'seed': self.seed
        }


# Utility functions for data model conversions
def dict_to_sampled_curve(data: Dict[str, Any]) -> SampledCurve:
    """Convert dictionary (CSV/JSON field names) to SampledCurve object"""
    n = int(data['n']) if 'n' in data else sum(1 for key in data if key.startswith('x') and key[1:].isdigit())
    columns = [data[f'x{i + 1}'] for i in range(n)] + [data[f'y{i + 1}'] for i in range(n)]
    return SampledCurve(s_grid=data['s'], z=np.column_stack(columns), t=data['t'])


def dict_to_multiplier(data: Dict[str, Any]) -> Multiplier:
    """Convert dictionary to Multiplier object"""
    return Multiplier(
        lambda_init=data['lambda_init'],
        k=data['k'],
        R=data.get('R', 1.0),
        lambda0=data.get('lambda0', 1)
    )


def dict_to_extremal_trace(data: Dict[str, Any]) -> ExtremalTrace:
    """Convert dictionary to ExtremalTrace object"""
    diagnostics = data.get('diagnostics', {})
    return ExtremalTrace(
        curve=dict_to_sampled_curve(data['curve']),
        a_samples=np.asarray(data['a'], dtype=float),
        v_samples=np.asarray(data['v'], dtype=float),
        diagnostics=TraceDiagnostics(
            speed_dev=diagnostics.get('speed_dev', float('nan')),
            dual_dev=diagnostics.get('dual_dev', float('nan')),
            hamiltonian_dev=diagnostics.get('hamiltonian_dev', float('nan')),
            pairing_dev=diagnostics.get('pairing_dev', float('nan')),
            hamiltonian_constant=diagnostics.get('hamiltonian_constant', float('nan'))
        ),
        multiplier=dict_to_multiplier(data['multiplier']) if data.get('multiplier') else None
    )


def dict_to_homogeneous_descriptor(data: Dict[str, Any], n: int = 1) -> HomogeneousNormDescriptor:
    """Strict conversion of {"p": ..., "a": ..., "n"?: ...}; unknown fields are rejected"""
    if not isinstance(data, dict):
        raise ValidationError("homogeneous norm descriptor must be a JSON object", field='norm-hom')
    for key in data:
        if key not in ('p', 'a', 'n'):
            raise ValidationError(f"unknown field {key!r} in homogeneous norm descriptor", field=key)
    for key in ('p', 'a'):
        if key not in data:
            raise ValidationError(f"missing field {key!r} in homogeneous norm descriptor", field=key)
    group_dim = data.get('n', n)
    if isinstance(group_dim, bool) or not isinstance(group_dim, int):
        raise ValidationError(f"n must be an integer, got {group_dim!r}", field='n')
    return HomogeneousNormDescriptor(p=data['p'], a=data['a'], n=group_dim)
