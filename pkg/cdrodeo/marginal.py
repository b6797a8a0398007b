#!/usr/bin/env python3
"""
Marginal pre-estimates f̃_X(X_i) for the conditional density estimator

Three sources are available:

- known: an analytic density of X evaluated at the observations
- preestimator: a classical product-kernel density estimate built on an auxiliary
  sample of size ceil(n^c), with bandwidth n_X^(-(c-1)/(c·d1))
- chained: f_X(x) = f_X1(x1) Π_j f_{Xj | X1..X(j-1)}(x_1..x_j), each factor estimated
  at every observation by a RevDir run on the same sample

Whatever the source, values are floored at n^(-1/2).
"""

import hashlib
import logging
import math
import time
from abc import ABC
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

from .errors import CDRodeoError, DimensionMismatch, InvalidInput, MissingAuxSample, StageFailure
from .estimator import EvalPoint, MarginalValues, Sample
from .kernels import KERNELS, Kernel
from .rodeo import RodeoConfig, Variant, run_revdir

logger = logging.getLogger(__name__)

# Bytes of kernel matrix built at once by the pre-estimator
PREESTIMATOR_BLOCK = 16_000_000


class MarginalSource(ABC):
    """Where marginal values come from"""

    kind: str = ''


@dataclass(frozen=True)
class KnownMarginal(MarginalSource):
    """Analytic density: evaluator maps an m×d1 array to m densities"""

    evaluator: Callable[[np.ndarray], np.ndarray]
    kind: str = 'known'


@dataclass(frozen=True)
class KernelPreestimator(MarginalSource):
    """Product-kernel density estimate on an auxiliary sample of size ceil(n^c)"""

    c: float = 2.0
    kernel: Kernel = KERNELS['gaussian']
    kind: str = 'preestimator'

    def __post_init__(self):
        if not self.c > 1.0:
            raise InvalidInput(f"Pre-estimator exponent c must exceed 1, got {self.c}")


@dataclass(frozen=True)
class ChainedRodeo(MarginalSource):
    """
    Chained conditional decomposition, one RevDir stage per coordinate of X

    Attributes:
        config: Tuning shared by the stages (stage 1 always uses a = -1)
        cache_dir: Directory for per-stage CSV caches; None disables caching
        workers: Threads used across observations within a stage
    """

    config: RodeoConfig = field(default_factory=RodeoConfig)
    cache_dir: Optional[Path] = None
    workers: Optional[int] = None
    kind: str = 'chained'


def required_aux_size(n: int, c: float) -> int:
    """Auxiliary sample size n_X = ceil(n^c)"""
    return int(math.ceil(n ** c))


def preestimator_bandwidth(n_x: int, d1: int, c: float) -> float:
    """h_X = n_X^(-(c-1)/(c·d1))"""
    if not c > 1.0:
        raise InvalidInput(f"Pre-estimator exponent c must exceed 1, got {c}")
    return float(n_x) ** (-(c - 1.0) / (c * d1))


def aux_rows(aux_sample: np.ndarray) -> np.ndarray:
    """n_X×d1 view of the auxiliary draws; a 1-D sample is n_X draws of a scalar X"""
    aux = np.asarray(aux_sample, dtype=float)
    return aux.reshape(-1, 1) if aux.ndim <= 1 else aux


def kernel_preestimate_many(aux_sample: np.ndarray, points: np.ndarray, kernel: Kernel, c: float) -> np.ndarray:
    """
    Kernel density estimate of X from the auxiliary sample, at each row of `points`

    Args:
        aux_sample: n_X×d1 auxiliary draws of X
        points: m×d1 evaluation points
        kernel: Univariate kernel (the theory asks for a compact one)
        c: Exponent linking n_X to the main sample size

    Returns:
        m estimates (1/(n_X h_X^d1)) Σ_i Π_j K((u_j - X̃_ij)/h_X)
    """
    aux = aux_rows(aux_sample)
    points = np.asarray(points, dtype=float)
    points = points.reshape(-1, 1) if points.ndim <= 1 and aux.shape[1] == 1 else np.atleast_2d(points)
    if aux.shape[0] < 1:
        raise MissingAuxSample("The auxiliary sample is empty")
    if aux.shape[1] != points.shape[1]:
        raise DimensionMismatch(f"Auxiliary sample has {aux.shape[1]} columns, points have {points.shape[1]}")
    n_x, d1 = aux.shape
    h_x = preestimator_bandwidth(n_x, d1, c)
    if not kernel.is_compact:
        logger.debug(f"Pre-estimator uses the unbounded '{kernel.name}' kernel")

    block = max(1, PREESTIMATOR_BLOCK // (8 * n_x * d1))
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], block):
        chunk = points[start:start + block]
        weights = np.ones((chunk.shape[0], n_x))
        for j in range(d1):
            weights *= kernel.evaluate((chunk[:, j, None] - aux[None, :, j]) / h_x)
        out[start:start + block] = weights.sum(axis=1) / (n_x * h_x ** d1)
    return out


def kernel_preestimate(aux_sample: np.ndarray, u, kernel: Kernel, c: float) -> float:
    """
    Kernel density estimate of X at a single point u

    Raises:
        InvalidInput: c <= 1
    """
    u = np.asarray(u, dtype=float).reshape(1, -1)
    return float(kernel_preestimate_many(aux_sample, u, kernel, c)[0])


class ChainedMarginalPipeline:
    """
    Runs the chained decomposition stage by stage

    Stage j treats (X_1..X_j) as a sample with d1 = j - 1 and d2 = 1, uses the floored
    product of the previous stages as its marginal, and evaluates RevDir at every
    observation. Stage outputs are cached as 'index,value' CSV files when a cache
    directory is given, so an interrupted pipeline resumes at the first missing stage.
    """

    def __init__(self, sample: Sample, config: RodeoConfig, cache_dir: Optional[Path] = None,
                 workers: Optional[int] = None):
        """
        Args:
            sample: Observations; only the X columns are used
            config: Stage tuning
            cache_dir: Directory for stage caches
            workers: Threads used across observations
        """
        if sample.d1 < 1:
            raise InvalidInput("The chained marginal needs d1 >= 1")
        self.sample = sample
        self.config = replace(config, variant=Variant.REVDIR)
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.workers = workers
        self.stage_times_ms: List[np.ndarray] = []

    def stage_config(self, stage: int) -> RodeoConfig:
        return replace(self.config, a=-1.0) if stage == 1 else self.config

    def _fingerprint(self, stage: int) -> str:
        digest = hashlib.sha256(np.ascontiguousarray(self.sample.x[:, :stage]).tobytes())
        cfg = self.stage_config(stage)
        digest.update(repr((cfg.a, cfg.beta, cfg.h0, cfg.kernel.name, cfg.reverse_guard, cfg.reverse_cap,
                            cfg.direct_floor, cfg.threshold_scale)).encode('utf-8'))
        return digest.hexdigest()

    def _cache_path(self, stage: int) -> Optional[Path]:
        return None if self.cache_dir is None else self.cache_dir / f"stage_{stage}.csv"

    def _load(self, stage: int) -> Optional[np.ndarray]:
        path = self._cache_path(stage)
        if path is None or not path.exists():
            return None
        with open(path, 'r', encoding='utf-8') as f:
            first = f.readline().strip()
        if first != f"# fingerprint={self._fingerprint(stage)}":
            logger.warning(f"Ignoring stale stage cache {path}")
            return None
        df = pd.read_csv(path, comment='#')
        if list(df.columns) != ['index', 'value'] or not np.array_equal(df['index'].to_numpy(), np.arange(self.sample.n)):
            logger.warning(f"Ignoring malformed stage cache {path}")
            return None
        logger.info(f"Resumed stage {stage} from {path}")
        return df['value'].to_numpy(dtype=float)

    def _save(self, stage: int, values: np.ndarray):
        path = self._cache_path(stage)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        df = pd.DataFrame({'index': np.arange(values.size), 'value': values})
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(f"# fingerprint={self._fingerprint(stage)}\n")
            df.to_csv(f, index=False, float_format='%.17g')
        logger.info(f"Saved stage {stage} values to {path}")

    def _run_stage(self, stage: int, stage_marginal: MarginalValues) -> np.ndarray:
        sub = self.sample.head(columns=stage, d1=stage - 1)
        config = self.stage_config(stage)
        times = np.zeros(sub.n)

        def evaluate(i: int) -> float:
            started = time.perf_counter()
            try:
                value = run_revdir(sub, stage_marginal, EvalPoint(sub.data[i]), config).estimate
            except CDRodeoError as e:
                raise StageFailure(stage, str(e), index=i) from e
            times[i] = (time.perf_counter() - started) * 1000.0
            return value

        if self.workers is not None and self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                values = np.fromiter(pool.map(evaluate, range(sub.n)), dtype=float, count=sub.n)
        else:
            values = np.array([evaluate(i) for i in range(sub.n)])
        self.stage_times_ms.append(times)
        return values

    def run(self) -> MarginalValues:
        """Evaluate every stage and return the floored running product"""
        n = self.sample.n
        running = np.ones(n)
        for stage in range(1, self.sample.d1 + 1):
            stage_marginal = MarginalValues.unit(n) if stage == 1 else MarginalValues(running)
            values = self._load(stage)
            if values is None:
                logger.info(f"Chained marginal: stage {stage}/{self.sample.d1} over {n} observations")
                values = self._run_stage(stage, stage_marginal)
                self._save(stage, values)
            else:
                self.stage_times_ms.append(np.full(n, np.nan))
            running = running * values
        return MarginalValues(running)


def chained_marginal(sample: Sample, stage_config: RodeoConfig, cache_dir: Optional[Path] = None,
                     workers: Optional[int] = None) -> MarginalValues:
    """
    Chained-conditioning estimate of f_X at every observation

    Args:
        sample: Observations with d1 >= 1
        stage_config: Tuning for the stages (stage 1 uses a = -1)
        cache_dir: Optional directory for resumable per-stage CSV caches
        workers: Threads used across observations within a stage

    Returns:
        MarginalValues, floored at n^(-1/2)

    Raises:
        StageFailure: a stage run failed (the cause is chained)
    """
    return ChainedMarginalPipeline(sample, stage_config, cache_dir, workers).run()


def marginal_values(sample: Sample, source: MarginalSource, aux_sample: Optional[np.ndarray] = None) -> MarginalValues:
    """
    Marginal values f̃_X(X_i) ∨ n^(-1/2) for every observation

    Args:
        sample: Observations
        source: KnownMarginal, KernelPreestimator or ChainedRodeo
        aux_sample: n_X×d1 auxiliary draws, required by (and only by) the pre-estimator

    Returns:
        MarginalValues aligned with the sample rows

    Raises:
        MissingAuxSample: pre-estimator without auxiliary sample
        DimensionMismatch: auxiliary sample width differs from d1
    """
    if sample.d1 == 0:
        return MarginalValues.unit(sample.n)
    if aux_sample is not None and not isinstance(source, KernelPreestimator):
        raise InvalidInput(f"An auxiliary sample is only used by the pre-estimator, not by '{source.kind}'")

    if isinstance(source, KnownMarginal):
        raw = np.asarray(source.evaluator(np.array(sample.x)), dtype=float).reshape(-1)
        if raw.size != sample.n:
            raise DimensionMismatch(f"Known marginal returned {raw.size} values for n = {sample.n}")
        if not np.all(np.isfinite(raw)) or np.any(raw < 0.0):
            raise InvalidInput("Known marginal must return finite nonnegative values")
        return MarginalValues(raw)

    if isinstance(source, KernelPreestimator):
        if aux_sample is None:
            raise MissingAuxSample("The kernel pre-estimator needs an auxiliary sample of X")
        aux = aux_rows(aux_sample)
        if aux.shape[1] != sample.d1:
            raise DimensionMismatch(f"Auxiliary sample has {aux.shape[1]} columns but d1 = {sample.d1}")
        wanted = required_aux_size(sample.n, source.c)
        if aux.shape[0] < wanted:
            logger.warning(f"Auxiliary sample has {aux.shape[0]} rows, fewer than ceil(n^c) = {wanted}")
        return MarginalValues(kernel_preestimate_many(aux, sample.x, source.kernel, source.c))

    if isinstance(source, ChainedRodeo):
        return chained_marginal(sample, source.config, source.cache_dir, source.workers)

    raise InvalidInput(f"Unsupported marginal source {source!r}")
