"""
Norm Interfaces for the sub-Finsler geodesics toolkit

This module defines the contract every convex norm on R^{2n} implements so
that the integrator, the boundary-value solvers and the experiments can treat
builtin and user-supplied norms uniformly.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict
import logging

import numpy as np

from models.data_models import ConvexSetApprox, NormFlags

logger = logging.getLogger(__name__)


class NormOracle(ABC):
    """
    Abstract convex norm N on R^dim.

    Every array method acts along the last axis and accepts inputs of shape
    (..., dim). Implementations are immutable after construction.
    """

    #: True when dual_gradient comes from a closed form rather than differences
    exact_dual_gradient: bool = False

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension 2n of the horizontal space"""
        pass

    @property
    @abstractmethod
    def flags(self) -> NormFlags:
        """Strict convexity and smoothness flags"""
        pass

    @abstractmethod
    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """N(z)"""
        pass

    @abstractmethod
    def dual_evaluate(self, p: np.ndarray) -> np.ndarray:
        """N*(p) = sup{p.z : N(z) = 1}"""
        pass

    @abstractmethod
    def dual_gradient(self, p: np.ndarray) -> np.ndarray:
        """grad N*(p), with NaN rows where N* is not differentiable"""
        pass

    @abstractmethod
    def subdifferential(self, z: np.ndarray) -> ConvexSetApprox:
        """dN(z) for a single point z"""
        pass

    @abstractmethod
    def descriptor(self) -> Dict[str, Any]:
        """JSON norm descriptor that rebuilds this norm"""
        pass

    def gradient(self, z: np.ndarray) -> np.ndarray:
        """grad N(z), NaN where dN(z) is not a singleton"""
        z = np.asarray(z, dtype=float)
        flat = z.reshape(-1, self.dim)
        out = np.full(flat.shape, np.nan)
        for i, point in enumerate(flat):
            if not np.any(point):
                continue
            sub = self.subdifferential(point)
            if sub.is_singleton:
                out[i] = sub.witnesses[0]
        return out.reshape(z.shape)

    def subgradient(self, z: np.ndarray) -> np.ndarray:
        """One element of dN(z) per row, zero at the origin"""
        z = np.asarray(z, dtype=float)
        flat = z.reshape(-1, self.dim)
        out = np.array(self.gradient(flat), dtype=float).reshape(flat.shape)
        for i in np.flatnonzero(np.any(np.isnan(out), axis=-1)):
            out[i] = 0.0 if not np.any(flat[i]) else np.mean(self.subdifferential(flat[i]).witnesses, axis=0)
        return out.reshape(z.shape)

    def squared(self, z: np.ndarray) -> np.ndarray:
        """F_N(z) = N(z)^2 / 2"""
        return 0.5 * self.evaluate(z) ** 2

    def dual_squared(self, p: np.ndarray) -> np.ndarray:
        """F_N*(p) = N*(p)^2 / 2"""
        return 0.5 * self.dual_evaluate(p) ** 2

    def unit_sphere_point(self, direction: np.ndarray) -> np.ndarray:
        """Radial projection of a nonzero direction onto the unit sphere of N"""
        direction = np.asarray(direction, dtype=float)
        return direction / self.evaluate(direction)[..., None]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.descriptor()})"
