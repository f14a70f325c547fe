# Models package initialization

from .data_models import (
    GroupPoint, SampledCurve, HomogeneousNormDescriptor, NormFlags,
    ConvexSetApprox, Multiplier, ExtremalTrace, TraceDiagnostics,
    ExtremalReport, ShootingProblem, ShootingMode, ShootingResult,
    DirectProblem, DirectSolution, PlanarConvexBody, BlowDownReport,
    BoundednessCertificate, GLPReport, RunConfig, Subcommand
)
from .norm_interfaces import NormOracle

__all__ = [
    'GroupPoint',
    'SampledCurve',
    'HomogeneousNormDescriptor',
    'NormFlags',
    'ConvexSetApprox',
    'Multiplier',
    'ExtremalTrace',
    'TraceDiagnostics',
    'ExtremalReport',
    'ShootingProblem',
    'ShootingMode',
    'ShootingResult',
    'DirectProblem',
    'DirectSolution',
    'PlanarConvexBody',
    'BlowDownReport',
    'BoundednessCertificate',
    'GLPReport',
    'RunConfig',
    'Subcommand',
    'NormOracle'
]
