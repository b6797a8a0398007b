#!/usr/bin/env python3
"""
Robustness to irrelevant components

For each d1 on the grid, R independent samples are drawn and the procedure is run at
the set point. Models b and c depend on (x1, y) only, so every other x-component is
irrelevant and should be smoothed out with a large bandwidth while the relevant ones
keep similar values whatever d. Model a has no irrelevant component and serves as the
non-sparse reference, evaluated at x = 0, y = (0, 0.5).
"""

import logging
from typing import List

import numpy as np
import pandas as pd

from ..errors import DimensionMismatch
from ..estimator import EvalPoint
from ..models import ModelSpec, default_point, sample_model, true_density
from ..rng import derive_seed
from .runner import bandwidth_columns, build_marginal, estimate_at, map_ordered, worker_count
from .settings import ExperimentSettings

logger = logging.getLogger(__name__)

SPARSITY_COLUMNS = ['d1', 'd', 'replicate', 'estimate', 'true_density', 'abs_error', 'stop_reason']
NON_SPARSE_Y2 = 0.5


def relevant_components(model: str, d1: int) -> List[int]:
    """0-based components the conditional density depends on"""
    if model == 'a':
        return list(range(d1 + 2))
    return [0, d1]


def irrelevant_components(model: str, d1: int) -> List[int]:
    relevant = set(relevant_components(model, d1))
    d = d1 + (2 if model == 'a' else 1)
    return [k for k in range(d) if k not in relevant]


def sparsity_point(settings: ExperimentSettings, spec: ModelSpec) -> EvalPoint:
    """--w when its length fits this d1, otherwise the zero point (y2 = 0.5 for model a)"""
    if settings.w is not None and settings.w.d == spec.d:
        return settings.w
    if settings.w is not None and len(settings.d1_grid) == 1:
        raise DimensionMismatch(f"--w has {settings.w.d} coordinates but d = {spec.d}")
    w = np.array(default_point(spec).w)
    if spec.model == 'a':
        w[-1] = NON_SPARSE_Y2
    return EvalPoint(w)


def sparsity(settings: ExperimentSettings) -> pd.DataFrame:
    """
    Estimates and selected bandwidths over d1 and replicates

    Args:
        settings: Uses d1_grid, replicates (R), model, n and the marginal source

    Returns:
        DataFrame d1,d,replicate,estimate,true_density,abs_error,stop_reason,h1..hD where D
        is the largest d on the grid; bandwidth cells beyond a run's own d are blank
    """
    tasks = [(d1, r) for d1 in settings.d1_grid for r in range(settings.replicates)]

    def run_replicate(task):
        d1, replicate = task
        spec = settings.model_spec(d1=d1, seed=derive_seed(settings.seed, d1, replicate))
        w = sparsity_point(settings, spec)
        sample = sample_model(spec, settings.n)
        marginal = build_marginal(settings, sample, spec, workers=1, cache_tag=f"d1_{d1}_rep_{replicate}")
        result = estimate_at(sample, marginal, w, settings)
        f_true = true_density(spec, w)
        row = (d1, spec.d, replicate, result.estimate, f_true, abs(result.estimate - f_true), result.stop_reason.value)
        return row, result.bandwidth.values

    logger.info(f"sparsity: model {settings.model}, d1 grid {list(settings.d1_grid)}, "
                f"R={settings.replicates}, n={settings.n}")
    results = map_ordered(run_replicate, tasks, worker_count(settings),
                          label=lambda task: f"sparsity d1={task[0]} replicate {task[1]}")
    df = pd.DataFrame([row for row, _ in results], columns=SPARSITY_COLUMNS)
    width = max(d1 for d1 in settings.d1_grid) + (2 if settings.model == 'a' else 1)
    return pd.concat([df, bandwidth_columns((h for _, h in results), width)], axis=1)


def bandwidth_medians(df: pd.DataFrame, model: str) -> pd.DataFrame:
    """
    Per-d1 medians of the relevant and irrelevant bandwidths

    Args:
        df: Output of `sparsity`
        model: Model the table was produced with

    Returns:
        DataFrame d1,relevant_x1,relevant_y1,irrelevant_median (pooled over irrelevant components)
    """
    rows = []
    for d1, group in df.groupby('d1', sort=True):
        h = group[[f"h{k + 1}" for k in range(int(group['d'].iloc[0]))]].to_numpy()
        irrelevant = irrelevant_components(model, int(d1))
        row = {
            'd1': int(d1),
            'relevant_x1': float(np.median(h[:, 0])),
            'relevant_y1': float(np.median(h[:, int(d1)])),
            'irrelevant_median': float(np.median(h[:, irrelevant])) if irrelevant else np.nan,
        }
        rows.append(row)
    return pd.DataFrame(rows)
