"""
Shared fixtures for the sub-Finsler test-suite
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from core.convex_norms import PNorm, PolygonNorm, make_example52, regular_polygon_vertices  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def euclidean():
    return PNorm(2, 2.0)


@pytest.fixture
def example52():
    return make_example52()


@pytest.fixture
def l1_norm():
    return PNorm(2, 1.0)


@pytest.fixture
def max_norm():
    return PNorm(2, 'inf')


@pytest.fixture
def hexagon():
    return PolygonNorm(regular_polygon_vertices(6))


@pytest.fixture
def strictly_convex_norms():
    return [PNorm(2, 1.5), PNorm(2, 2.0), PNorm(2, 3.0), make_example52()]
