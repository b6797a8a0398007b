"""
Running-time benchmark of the RevDir procedure

Times run_revdir over a geometric grid of n at fixed d1 and over a grid of d1 at
fixed n, with one warm-up run per configuration, and fits the log-log slope of wall
time against n.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..models import default_point, sample_model
from ..rng import derive_seed
from ..rodeo import Variant
from .runner import blank_timing, build_marginal, estimate_at, timed
from .settings import ExperimentSettings

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ['n', 'd', 'wall_time_ms', 'z_evaluations']


@dataclass
class BenchReport:
    """Timing table and the fitted slope of log time against log n"""

    table: pd.DataFrame
    slope: float


def z_evaluation_bound(n: int, d: int, beta: float) -> int:
    """d·ceil(log_{1/β} n) + d"""
    return d * math.ceil(math.log(n) / math.log(1.0 / beta)) + d


def loglog_slope(n_values, times_ms) -> float:
    """Least-squares slope of log(time) against log(n)"""
    fit = stats.linregress(np.log(np.asarray(n_values, dtype=float)), np.log(np.asarray(times_ms, dtype=float)))
    return float(fit.slope)


def _measure(settings: ExperimentSettings, n: int, d1: int) -> Tuple[int, int, float, int]:
    spec = settings.model_spec(d1=d1, seed=derive_seed(settings.seed, n, d1))
    sample = sample_model(spec, n)
    marginal = build_marginal(settings, sample, spec, workers=1, cache_tag=f"bench_n_{n}_d1_{d1}")
    w = default_point(spec)

    times = []
    result = None
    for repeat in range(settings.bench_repeats):
        result, wall_time_ms = timed(lambda: estimate_at(sample, marginal, w, settings, variant=Variant.REVDIR),
                                     warmup=repeat == 0)
        times.append(wall_time_ms)
    evaluations = result.trace.z_evaluations
    bound = z_evaluation_bound(n, spec.d, settings.beta)
    if evaluations > bound:
        logger.warning(f"bench: {evaluations} Z evaluations exceed d·ceil(log_(1/β) n) + d = {bound} (n={n}, d={spec.d})")
    logger.info(f"bench: n={n}, d={spec.d}, median {np.median(times):.2f} ms, {evaluations} Z evaluations")
    return n, spec.d, float(np.median(times)), evaluations


def bench(settings: ExperimentSettings) -> BenchReport:
    """
    Benchmark over n_grid at d1 and over d1_grid at n

    Runs are sequential so that timings do not compete for cores.

    Args:
        settings: Uses n_grid, d1_grid, d1, n, bench_repeats and the marginal source

    Returns:
        BenchReport; table columns n,d,wall_time_ms,z_evaluations, n-sweep rows first
    """
    configurations: List[Tuple[int, int]] = [(n, settings.model_d1) for n in settings.n_grid]
    configurations += [(settings.n, d1) for d1 in settings.d1_grid if (settings.n, d1) not in configurations]

    rows = [_measure(settings, n, d1) for n, d1 in configurations]
    table = pd.DataFrame(rows, columns=BENCH_COLUMNS)

    n_sweep = table.iloc[:len(settings.n_grid)]
    slope = math.nan
    if len(settings.n_grid) >= 2:
        slope = loglog_slope(n_sweep['n'], n_sweep['wall_time_ms'])
        logger.info(f"bench: log-log slope of time against n is {slope:.3f}")
    return BenchReport(blank_timing(table, settings), slope)
