# Services package initialization

from .geodesic_bvp import GeodesicBVPService
from .glp_lab import GLPLabService
from .isoperimetrix import IsoperimetrixService

__all__ = [
    'GeodesicBVPService',
    'GLPLabService',
    'IsoperimetrixService'
]
