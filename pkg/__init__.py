# Sub-Finsler geodesics toolkit
# Main package initialization

__version__ = "1.0.0"
__description__ = "Sub-Finsler geodesics on Heisenberg groups: extremals, shooting, isoperimetrix and linearity experiments"

from .config import config, Config

__all__ = [
    'config',
    'Config'
]
