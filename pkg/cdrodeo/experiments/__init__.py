"""
Reproduction harness

Each experiment takes an ExperimentSettings and returns pandas tables; the CLI writes
them as CSV.
"""

from .bench import BenchReport, bench
from .calibration import SweepResult, sweep_a, sweep_beta
from .pointwise import MarginalReport, estimate_point, marginal_pipeline
from .reconstruction import reconstruct
from .settings import ExperimentSettings, load_config_file, resolve_settings
from .sparsity import sparsity

__all__ = [
    'BenchReport',
    'ExperimentSettings',
    'MarginalReport',
    'SweepResult',
    'bench',
    'estimate_point',
    'load_config_file',
    'marginal_pipeline',
    'reconstruct',
    'resolve_settings',
    'sparsity',
    'sweep_a',
    'sweep_beta',
]
