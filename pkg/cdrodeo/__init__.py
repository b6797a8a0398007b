"""
cdrodeo Package

Greedy bandwidth selection for pointwise kernel conditional density estimation
(Direct, Reverse and RevDir procedures), with marginal pre-estimators, simulation
models and a reproduction harness.
"""

from .errors import (
    CDRodeoError,
    DimensionMismatch,
    InvalidInput,
    MissingAuxSample,
    NonConvergence,
    NumericalFailure,
    StageFailure,
)
from .estimator import Bandwidth, EvalPoint, MarginalValues, Sample, default_h0, estimate, threshold, z_statistics
from .kernels import BiweightKernel, GaussianKernel, Kernel, KernelNorms, compute_norms, get_kernel
from .marginal import (
    ChainedRodeo,
    KernelPreestimator,
    KnownMarginal,
    chained_marginal,
    kernel_preestimate,
    marginal_values,
)
from .models import ModelSpec, marginal_density, sample_model, true_density
from .rodeo import RodeoConfig, RodeoResult, StopReason, Variant, run_direct, run_reverse, run_revdir, run_rodeo

__all__ = [
    'Bandwidth',
    'BiweightKernel',
    'CDRodeoError',
    'ChainedRodeo',
    'DimensionMismatch',
    'EvalPoint',
    'GaussianKernel',
    'InvalidInput',
    'Kernel',
    'KernelNorms',
    'KernelPreestimator',
    'KnownMarginal',
    'MarginalValues',
    'MissingAuxSample',
    'ModelSpec',
    'NonConvergence',
    'NumericalFailure',
    'RodeoConfig',
    'RodeoResult',
    'Sample',
    'StageFailure',
    'StopReason',
    'Variant',
    'chained_marginal',
    'compute_norms',
    'default_h0',
    'estimate',
    'get_kernel',
    'kernel_preestimate',
    'marginal_density',
    'marginal_values',
    'run_direct',
    'run_reverse',
    'run_revdir',
    'run_rodeo',
    'sample_model',
    'threshold',
    'true_density',
    'z_statistics',
]

__version__ = '1.0.0'
