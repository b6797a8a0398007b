"""
Shared experiment plumbing: marginals, the worker pool, timing and CSV output
"""

import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import pandas as pd

import config
from ..errors import CDRodeoError, InvalidInput
from ..estimator import EvalPoint, MarginalValues, Sample
from ..marginal import ChainedRodeo, KernelPreestimator, KnownMarginal, marginal_values, required_aux_size
from ..models import ModelSpec, marginal_density, sample_marginal_x
from ..rodeo import RodeoResult, run_rodeo
from .settings import ExperimentSettings

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def worker_count(settings: ExperimentSettings) -> int:
    """--threads, or the available parallelism"""
    return settings.threads if settings.threads is not None else (os.cpu_count() or 1)


def map_ordered(task: Callable[[T], R], items: Sequence[T], threads: int,
                label: Callable[[T], str] = str) -> List[R]:
    """
    Run `task` over `items` on a thread pool and return results in input order

    Args:
        task: Work for one item
        items: Inputs, typically (replicate, point) identities
        threads: Pool size; 1 runs inline
        label: Describes an item in the failure log

    Raises:
        CDRodeoError: the first failing item aborts the batch
    """

    def guarded(item: T) -> R:
        try:
            return task(item)
        except CDRodeoError as e:
            logger.error(f"[ERROR] {label(item)} failed: {e}")
            raise

    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(guarded, items))
    return [guarded(item) for item in items]


def timed(run: Callable[[], R], warmup: bool = False) -> Tuple[R, float]:
    """
    Call `run` and measure it with the monotonic clock

    Args:
        run: Zero-argument callable
        warmup: Make one untimed call first

    Returns:
        (result of the timed call, wall time in ms)
    """
    if warmup:
        run()
    started = time.perf_counter()
    result = run()
    return result, (time.perf_counter() - started) * 1000.0


def build_marginal(settings: ExperimentSettings, sample: Sample, spec: Optional[ModelSpec],
                   source: Optional[str] = None, workers: Optional[int] = None,
                   cache_tag: str = '') -> MarginalValues:
    """
    Marginal values for a sample according to --marginal (or `source`)

    Args:
        settings: Experiment settings
        sample: Observations
        spec: Model the sample came from; None for external data
        source: 'known', 'preestimator' or 'chained'; defaults to settings.marginal
        workers: Threads for the chained pipeline
        cache_tag: Sub-directory of --cache-dir for this sample's stage caches

    Returns:
        MarginalValues floored at n^(-1/2)
    """
    source = source or settings.marginal
    if sample.d1 == 0:
        return MarginalValues.unit(sample.n)

    if source == 'known':
        if spec is None:
            raise InvalidInput("--marginal known needs a model; use preestimator or chained with --input")
        return marginal_values(sample, KnownMarginal(lambda x: marginal_density(spec, x)))

    if source == 'preestimator':
        if spec is None:
            raise InvalidInput("--marginal preestimator draws its auxiliary sample from the model; use chained with --input")
        size = required_aux_size(sample.n, settings.preestimator_c)
        if size > settings.aux_cap:
            logger.warning(f"Auxiliary sample of ceil(n^c) = {size} rows capped at {settings.aux_cap}")
            size = settings.aux_cap
        aux = sample_marginal_x(spec, size, workers=workers)
        preestimator = KernelPreestimator(c=settings.preestimator_c, kernel=settings.rodeo_config().kernel)
        return marginal_values(sample, preestimator, aux_sample=aux)

    if source == 'chained':
        cache_dir = settings.cache_dir / cache_tag if settings.cache_dir is not None and cache_tag else settings.cache_dir
        chained = ChainedRodeo(config=settings.rodeo_config(), cache_dir=cache_dir, workers=workers)
        return marginal_values(sample, chained)

    raise InvalidInput(f"Unknown marginal source '{source}'")


def estimate_at(sample: Sample, marginal: MarginalValues, w: EvalPoint, settings: ExperimentSettings,
                **overrides) -> RodeoResult:
    """One bandwidth selection run with the settings' procedure"""
    return run_rodeo(sample, marginal, w, settings.rodeo_config(**overrides))


def bandwidth_columns(results: Iterable[Optional[np.ndarray]], width: int) -> pd.DataFrame:
    """h1..h<width> columns, blank where a run has fewer components"""
    rows = []
    for values in results:
        row = np.full(width, np.nan)
        if values is not None:
            row[:values.size] = values
        rows.append(row)
    return pd.DataFrame(np.array(rows).reshape(-1, width), columns=[f"h{k}" for k in range(1, width + 1)])


def blank_timing(df: pd.DataFrame, settings: ExperimentSettings, columns: Sequence[str] = ('wall_time_ms',)) -> pd.DataFrame:
    """Empty the timing columns under --no-timing so output is byte-identical across runs"""
    if settings.no_timing:
        for column in columns:
            if column in df.columns:
                df[column] = np.nan
    return df


def companion_path(out: Optional[Path], suffix: str) -> Optional[Path]:
    """results.csv -> results_<suffix>.csv"""
    if out is None:
        return None
    return out.with_name(f"{out.stem}_{suffix}{out.suffix or '.csv'}")


def write_csv(df: pd.DataFrame, out: Optional[Path], command: str):
    """
    Write a result table, preceded by a '# cdrodeo-csv v<version> <command>' line

    Args:
        df: Table with its final column order
        out: Destination path; None writes to stdout
        command: Subcommand that produced the table
    """
    header = f"# cdrodeo-csv v{config.CSV_FORMAT_VERSION} {command}\n"
    if out is None:
        sys.stdout.write(header)
        df.to_csv(sys.stdout, index=False, float_format=config.CSV_FLOAT_FORMAT, lineterminator='\n')
        sys.stdout.flush()
        logger.info(f"[SUCCESS] Wrote {len(df)} rows to stdout")
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, 'w', encoding='utf-8', newline='') as f:
        f.write(header)
        df.to_csv(f, index=False, float_format=config.CSV_FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"[SUCCESS] Saved {len(df)} rows to {out}")
