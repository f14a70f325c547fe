"""
Configuration management for the sub-Finsler geodesics toolkit
"""

import os
from typing import Dict, Any
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, str(default)))


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(name, repr(default)))


class Config:
    """Central configuration management"""

    def __init__(self):
        self.base_dir = Path(__file__).parent.parent  # Go up one level from config/ directory
        self.schemas_dir = self.base_dir / "schemas"
        self.logs_dir = Path(os.getenv('SUBFINSLER_LOG_DIR', str(self.base_dir / "logs")))

    @property
    def threads(self) -> int:
        """Worker cap for parallel trials and multi-start shooting"""
        default = os.cpu_count() or 1
        return max(1, _env_int('SUBFINSLER_THREADS', default))

    @property
    def seed(self) -> int:
        """Default 64-bit seed fed to numpy's PCG64 generator"""
        return _env_int('SUBFINSLER_SEED', 20240101)

    @property
    def integrator_config(self) -> Dict[str, Any]:
        """Pontryagin flow integration"""
        return {
            'steps_per_unit': _env_int('SUBFINSLER_STEPS_PER_UNIT', 2048),
            'min_steps': 16,
            'fd_step': 1e-7,  # central-difference step for the dual gradient fallback
            'kink_tolerance': 1e-4,  # one-sided slopes further apart than this mean a kink
            'multiplier_tolerance': 1e-8,
            'verify_tolerance': _env_float('SUBFINSLER_VERIFY_TOL', 1e-6),
        }

    @property
    def convex_config(self) -> Dict[str, Any]:
        """Convex-analysis checks"""
        return {
            'directions_2d': 64,
            'directions_per_dim': 16,  # 2·dim·16 sample directions in higher dimension
            'directional_step': 1e-7,
            'dual_coarse_samples': 720,
            'dual_refine_xatol': 1e-12,
            'convexity_trials': 400,
            'convexity_min_separation': 5e-2,
            'pinch_floor': 1e-10,
            'pinch_quadratic': 1e-4,
            'singleton_width': 1e-9,
            'numerical_singleton_width': 1e-4,
            'perturbation': 1e-4,
        }

    @property
    def shooting_config(self) -> Dict[str, Any]:
        """Shooting method for the two-point problem"""
        return {
            'steps': _env_int('SUBFINSLER_SHOOT_STEPS', 1024),
            'max_iter': _env_int('SUBFINSLER_SHOOT_MAX_ITER', 60),
            'tolerance': _env_float('SUBFINSLER_SHOOT_TOL', 1e-10),
            'jacobian_step': 1e-7,
            'min_damping': 1.0 / 1024,
            'nelder_mead_max_iter': 4000,
            'random_starts': 16,
            'horizontal_ratio': 1e-3,  # |t| / N(z)^2 below this counts as near-horizontal
            'iso_angles': 48,
            'iso_scales': 12,
            'iso_seeds': 3,
            'duplicate_tolerance': 1e-6,
        }

    @property
    def direct_config(self) -> Dict[str, Any]:
        """Direct discretisation of the squared-norm control problem"""
        return {
            'intervals': 256,
            'penalty_schedule': [1e1, 1e2, 1e3, 1e4, 1e5],
            'max_iter_per_stage': 2000,
            'gtol': 1e-12,
        }

    @property
    def isoperimetrix_config(self) -> Dict[str, Any]:
        """Busemann isoperimetrix construction"""
        return {
            'resolution': 1024,
            'geodesic_resolution': 4096,
            'dedupe_tolerance': 1e-12,
            'convexity_tolerance': 1e-9,
            'corner_angle': _env_float('SUBFINSLER_CORNER_ANGLE', 0.1),
            'cache_size': _env_int('SUBFINSLER_POLAR_CACHE', 32),
        }

    @property
    def glp_config(self) -> Dict[str, Any]:
        """Blow-down and linearity experiments"""
        return {
            'blow_down_scales': [1, 2, 4, 8, 16, 32],
            'blow_down_samples': 513,
            'steps_per_unit': _env_int('SUBFINSLER_GLP_STEPS_PER_UNIT', 256),
            'k_range': (0.1, 2.0),
            'line_fraction': 0.25,  # share of trials run with k = 0
            'counterexample_segments': (0.5, 2.0),
            'direct_intervals': 256,
            'subintervals': 10,
        }

    @property
    def cli_config(self) -> Dict[str, Any]:
        """Command-line defaults"""
        return {
            'resolution': 1024,
            'trials': 20,
            'horizon': 50.0,
            'blow_down_scales': '1,2,4,8,16,32',
        }

    @property
    def logging_config(self) -> Dict[str, Any]:
        """Logging configuration"""
        level = os.getenv('SUBFINSLER_LOG_LEVEL', 'INFO').upper()
        return {
            'version': 1,
            'disable_existing_loggers': False,
            'formatters': {
                'standard': {
                    'format': '%(asctime)s [%(levelname)s] %(name)s: %(message)s'
                },
                'detailed': {
                    'format': '%(asctime)s [%(levelname)s] %(name)s:%(lineno)d: %(message)s'
                }
            },
            'handlers': {
                'console': {
                    'level': level,
                    'class': 'logging.StreamHandler',
                    'formatter': 'standard',
                    'stream': 'ext://sys.stderr'
                }
            },
            'loggers': {
                'subfinsler': {
                    'handlers': ['console'],
                    'level': 'DEBUG',
                    'propagate': False
                },
                'matplotlib': {'level': 'WARNING'},
                'numba': {'level': 'WARNING'}
            },
            'root': {
                'level': level,
                'handlers': ['console']
            }
        }

    def file_logging_config(self, log_file: Path) -> Dict[str, Any]:
        """Logging configuration with an additional detailed file handler"""
        cfg = self.logging_config
        cfg['handlers']['file'] = {
            'level': 'DEBUG',
            'class': 'logging.FileHandler',
            'filename': str(log_file),
            'formatter': 'detailed',
            'encoding': 'utf-8'
        }
        cfg['loggers']['subfinsler']['handlers'].append('file')
        cfg['root']['handlers'].append('file')
        return cfg


# Global configuration instance
config = Config()

SCHEMAS_DIR = config.schemas_dir
DEFAULT_SEED = config.seed
