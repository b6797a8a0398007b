#!/usr/bin/env python3
"""
Tuning sweeps over the threshold exponent a and the grid ratio β

sweep-a estimates at M points drawn from the joint law of W for each of B samples
and reports the absolute error for every a on the grid. sweep-beta estimates at a set
point and records the absolute error together with the wall time for every β.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import DimensionMismatch
from ..estimator import EvalPoint
from ..models import ModelSpec, default_point, sample_model, true_density, true_density_many
from ..rng import STREAM_POINTS, derive_seed
from .runner import blank_timing, build_marginal, estimate_at, map_ordered, timed, worker_count
from .settings import ExperimentSettings

logger = logging.getLogger(__name__)

SWEEP_A_COLUMNS = ['a', 'sample_id', 'point_id', 'f_true', 'abs_error']
SWEEP_A_SUMMARY_COLUMNS = ['a', 'sample_id', 'mean_abs_error', 'points']
SWEEP_BETA_COLUMNS = ['beta', 'sample_id', 'abs_error', 'wall_time_ms']
SWEEP_BETA_SUMMARY_COLUMNS = ['beta', 'mean_abs_error', 'mean_wall_time_ms', 'samples']


@dataclass
class SweepResult:
    """Long-format table plus its per-sample aggregate"""

    table: pd.DataFrame
    summary: pd.DataFrame


def sample_spec(settings: ExperimentSettings, sample_id: int) -> ModelSpec:
    """Model spec of sample b, seeded independently of every other sample"""
    return settings.model_spec(seed=derive_seed(settings.seed, sample_id))


def set_point(settings: ExperimentSettings, spec: ModelSpec) -> EvalPoint:
    w = settings.w if settings.w is not None else default_point(spec)
    if w.d != spec.d:
        raise DimensionMismatch(f"--w has {w.d} coordinates but model {spec.model} with d1={spec.d1} has d = {spec.d}")
    return w


def sweep_a(settings: ExperimentSettings) -> SweepResult:
    """
    Absolute error over a grid of a, B samples and M random points per sample

    Args:
        settings: Uses a_grid, samples (B), points (M), model, d1, n and the marginal source

    Returns:
        SweepResult with columns a,sample_id,point_id,f_true,abs_error and the
        per-sample means a,sample_id,mean_abs_error,points
    """

    def run_sample(sample_id: int):
        spec = sample_spec(settings, sample_id)
        sample = sample_model(spec, settings.n)
        marginal = build_marginal(settings, sample, spec, workers=1, cache_tag=f"sample_{sample_id}")
        points = sample_model(spec, settings.points, stream=STREAM_POINTS).data
        truth = true_density_many(spec, points)
        rows = []
        for a in settings.a_grid:
            for point_id, (w, f_true) in enumerate(zip(points, truth)):
                estimate = estimate_at(sample, marginal, EvalPoint(w), settings, a=a).estimate
                rows.append((a, sample_id, point_id, float(f_true), abs(estimate - float(f_true))))
        logger.info(f"sweep-a: sample {sample_id} done ({len(rows)} estimates)")
        return rows

    logger.info(f"sweep-a: model {settings.model}, d1={settings.model_d1}, n={settings.n}, "
                f"a grid {list(settings.a_grid)}, B={settings.samples}, M={settings.points}")
    results = map_ordered(run_sample, list(range(settings.samples)), worker_count(settings),
                          label=lambda b: f"sweep-a sample {b}")
    table = pd.DataFrame([row for rows in results for row in rows], columns=SWEEP_A_COLUMNS)
    table = table.sort_values(['a', 'sample_id', 'point_id'], kind='stable').reset_index(drop=True)
    summary = (table.groupby(['a', 'sample_id'], sort=True)['abs_error']
               .agg(mean_abs_error='mean', points='size').reset_index())
    return SweepResult(table, summary[SWEEP_A_SUMMARY_COLUMNS])


def best_a(summary: pd.DataFrame) -> float:
    """a with the smallest average of the per-sample mean absolute errors"""
    by_a = summary.groupby('a')['mean_abs_error'].mean()
    return float(by_a.idxmin())


def sweep_beta(settings: ExperimentSettings) -> SweepResult:
    """
    Absolute error and wall time over a grid of β at the set point

    Every timed run is preceded by an untimed warm-up run of the same configuration.

    Args:
        settings: Uses beta_grid, samples (B), w, model, d1 and n

    Returns:
        SweepResult with columns beta,sample_id,abs_error,wall_time_ms and per-β means
    """

    def run_sample(sample_id: int):
        spec = sample_spec(settings, sample_id)
        w = set_point(settings, spec)
        f_true = true_density(spec, w)
        sample = sample_model(spec, settings.n)
        marginal = build_marginal(settings, sample, spec, workers=1, cache_tag=f"sample_{sample_id}")
        rows = []
        for beta in settings.beta_grid:
            result, wall_time_ms = timed(lambda: estimate_at(sample, marginal, w, settings, beta=beta),
                                         warmup=not settings.no_timing)
            rows.append((beta, sample_id, abs(result.estimate - f_true), wall_time_ms))
        logger.info(f"sweep-beta: sample {sample_id} done")
        return rows

    logger.info(f"sweep-beta: model {settings.model}, d1={settings.model_d1}, n={settings.n}, "
                f"beta grid {list(settings.beta_grid)}, B={settings.samples}")
    results = map_ordered(run_sample, list(range(settings.samples)), worker_count(settings),
                          label=lambda b: f"sweep-beta sample {b}")
    table = pd.DataFrame([row for rows in results for row in rows], columns=SWEEP_BETA_COLUMNS)
    table = table.sort_values(['beta', 'sample_id'], kind='stable').reset_index(drop=True)
    summary = (table.groupby('beta', sort=True)
               .agg(mean_abs_error=('abs_error', 'mean'), mean_wall_time_ms=('wall_time_ms', 'mean'),
                    samples=('sample_id', 'size'))
               .reset_index())
    if not settings.no_timing:
        slowest = float(summary['beta'].iloc[int(np.argmax(summary['mean_wall_time_ms'].to_numpy()))])
        logger.info(f"sweep-beta: slowest mean run at beta={slowest}")
    table = blank_timing(table, settings)
    summary = blank_timing(summary, settings, ('mean_wall_time_ms',))
    return SweepResult(table, summary[SWEEP_BETA_SUMMARY_COLUMNS])
