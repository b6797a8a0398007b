"""
One-dimensional reconstructions: move one coordinate of the set point along a grid
"""

import logging
from typing import Optional

import numpy as np
import pandas as pd

from ..errors import InvalidInput
from ..estimator import EvalPoint, MarginalValues
from ..models import sample_model, true_density_many
from .calibration import set_point
from .runner import build_marginal, estimate_at, map_ordered, worker_count
from .settings import ExperimentSettings

logger = logging.getLogger(__name__)

RECONSTRUCT_COLUMNS = ['grid_value', 'estimate', 'true_density']


def direction_index(columns, direction: str) -> int:
    """Position of a coordinate named like the sample header (x1.., y1..); 'y' means y1"""
    name = 'y1' if direction == 'y' else direction
    if name not in columns:
        raise InvalidInput(f"Unknown direction '{direction}'. Available: {columns}")
    return columns.index(name)


def reconstruct(settings: ExperimentSettings) -> pd.DataFrame:
    """
    Estimate along a grid in one direction, the other coordinates fixed to the set point

    Args:
        settings: Uses w (default: the model's set point), direction, grid_min, grid_max,
            grid_points and optionally compare_marginal

    Returns:
        DataFrame grid_value,estimate,true_density[,estimate_alt] in grid order
    """
    spec = settings.model_spec()
    anchor = set_point(settings, spec)
    sample = sample_model(spec, settings.n, workers=settings.threads)
    axis = direction_index(sample.columns, settings.direction)
    grid = np.linspace(settings.grid_min, settings.grid_max, settings.grid_points)
    points = np.repeat(anchor.w[None, :], grid.size, axis=0)
    points[:, axis] = grid

    threads = worker_count(settings)
    marginal = build_marginal(settings, sample, spec, workers=threads, cache_tag='reconstruct')
    alternative: Optional[MarginalValues] = None
    if settings.compare_marginal is not None:
        alternative = build_marginal(settings, sample, spec, source=settings.compare_marginal, workers=threads,
                                     cache_tag='reconstruct')

    logger.info(f"reconstruct: model {settings.model}, d1={settings.model_d1}, n={settings.n}, "
                f"direction {sample.columns[axis]}, {grid.size} grid points")

    def run_point(k: int):
        w = EvalPoint(points[k])
        estimate = estimate_at(sample, marginal, w, settings).estimate
        alt = estimate_at(sample, alternative, w, settings).estimate if alternative is not None else None
        return estimate, alt

    results = map_ordered(run_point, list(range(grid.size)), threads, label=lambda k: f"grid point {grid[k]:g}")
    df = pd.DataFrame({
        'grid_value': grid,
        'estimate': [estimate for estimate, _ in results],
        'true_density': true_density_many(spec, points),
    })
    if alternative is not None:
        df['estimate_alt'] = [alt for _, alt in results]
    return df


def rmse(df: pd.DataFrame, column: str = 'estimate') -> float:
    """Root mean squared error of a reconstruction against the true density"""
    return float(np.sqrt(np.mean((df[column].to_numpy() - df['true_density'].to_numpy()) ** 2)))
