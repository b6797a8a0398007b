"""
Single-point estimation and the standalone chained-marginal pipeline
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from ..errors import InvalidInput
from ..estimator import Sample
from ..marginal import ChainedMarginalPipeline
from ..models import ModelSpec, marginal_density, sample_model, true_density
from .calibration import set_point
from .runner import bandwidth_columns, blank_timing, build_marginal, estimate_at, timed, worker_count
from .settings import ExperimentSettings

logger = logging.getLogger(__name__)


def format_point(w: np.ndarray) -> str:
    return ','.join(f"{v:g}" for v in w)


def load_sample(settings: ExperimentSettings) -> Tuple[Sample, Optional[ModelSpec]]:
    """The --input CSV (no model attached) or a fresh draw from --model"""
    if settings.input is not None:
        if not settings.input.is_file():
            raise InvalidInput(f"Input file not found: {settings.input}")
        sample = Sample.from_csv(settings.input, d1=settings.d1)
        logger.info(f"Loaded {sample.n} observations (d1={sample.d1}, d2={sample.d2}) from {settings.input}")
        return sample, None
    spec = settings.model_spec()
    return sample_model(spec, settings.n, workers=settings.threads), spec


def estimate_point(settings: ExperimentSettings) -> pd.DataFrame:
    """
    Run the selected procedure once at --w

    Args:
        settings: Model or input file, point, procedure and marginal source

    Returns:
        One-row DataFrame w,estimate,true_density,abs_error,h1..hd,stop_reason,iterations,wall_time_ms;
        true_density and abs_error are blank for external data
    """
    sample, spec = load_sample(settings)
    if spec is None:
        if settings.w is None:
            raise InvalidInput("--w is required with --input")
        w = settings.w
    else:
        w = set_point(settings, spec)
    marginal = build_marginal(settings, sample, spec, workers=worker_count(settings), cache_tag='estimate')

    result, wall_time_ms = timed(lambda: estimate_at(sample, marginal, w, settings), warmup=not settings.no_timing)
    f_true = true_density(spec, w) if spec is not None else math.nan
    logger.info(f"estimate: f̂(w) = {result.estimate:.6g} at h = {np.round(result.bandwidth.values, 4).tolist()}, "
                f"stop reason {result.stop_reason.value}")

    df = pd.DataFrame([{
        'w': format_point(w.w),
        'estimate': result.estimate,
        'true_density': f_true,
        'abs_error': abs(result.estimate - f_true),
    }])
    df = pd.concat([df, bandwidth_columns([result.bandwidth.values], sample.d)], axis=1)
    df['stop_reason'] = result.stop_reason.value
    df['iterations'] = result.trace.loop_iterations
    df['wall_time_ms'] = wall_time_ms
    return blank_timing(df, settings)


@dataclass
class MarginalReport:
    """Marginal values per observation and per-stage timings"""

    values: pd.DataFrame
    stages: pd.DataFrame


def marginal_pipeline(settings: ExperimentSettings) -> MarginalReport:
    """
    Chained-marginal pipeline on its own

    Args:
        settings: Model or input file, stage tuning, cache_dir and threads

    Returns:
        MarginalReport; values has columns index,x1..xd1,marginal[,true_marginal],
        stages has stage,mean_time_ms,total_time_ms
    """
    sample, spec = load_sample(settings)
    pipeline = ChainedMarginalPipeline(sample, settings.rodeo_config(), cache_dir=settings.cache_dir,
                                       workers=worker_count(settings))
    logger.info(f"marginal: chained pipeline over {sample.d1} stages, n={sample.n}")
    marginal = pipeline.run()

    values = pd.DataFrame(np.array(sample.x), columns=sample.columns[:sample.d1])
    values.insert(0, 'index', np.arange(sample.n))
    values['marginal'] = marginal.values
    if spec is not None:
        values['true_marginal'] = marginal_density(spec, sample.x)

    stages = pd.DataFrame({
        'stage': np.arange(1, len(pipeline.stage_times_ms) + 1),
        'mean_time_ms': [float(np.mean(t)) for t in pipeline.stage_times_ms],
        'total_time_ms': [float(np.sum(t)) for t in pipeline.stage_times_ms],
    })
    return MarginalReport(values, blank_timing(stages, settings, ('mean_time_ms', 'total_time_ms')))
