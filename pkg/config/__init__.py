"""
Configuration package for the sub-Finsler geodesics toolkit
Re-exports all configuration from config.config module
"""

from .config import (
    Config,
    config,
    SCHEMAS_DIR,
    DEFAULT_SEED
)

__all__ = [
    'Config',
    'config',
    'SCHEMAS_DIR',
    'DEFAULT_SEED'
]
