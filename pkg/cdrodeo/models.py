#!/usr/bin/env python3
"""
Simulation models with closed-form conditional densities

Model a: Y2 ~ IG(4, 3), Y1 | Y2 ~ N(0, Y2), X_j | Y iid N(Y1, Y2); d2 = 2, no sparsity.
Model b: X_j iid N(0, 1), Y | X ~ N(3 X_1³, 0.5²); d2 = 1, only (x1, y) relevant.
Model c: X_j iid U[-1, 1], Y | X ~ N(3 X_1³, 0.5²); d2 = 1, discontinuous at the cube edge.

IG(α, b) uses the shape-scale convention, density ∝ y^-(α+1) e^(-b/y), sampled as b / Gamma(α, 1).
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .errors import DimensionMismatch, InvalidInput
from .estimator import EvalPoint, Sample
from .rng import STREAM_AUX, STREAM_SAMPLE, generate_rows

logger = logging.getLogger(__name__)

MODELS = ('a', 'b', 'c')
IG_SHAPE = 4.0
IG_SCALE = 3.0
NOISE_SD = 0.5
LOG_SQRT_2_OVER_PI = 0.5 * math.log(2.0 / math.pi)


@dataclass(frozen=True)
class ModelSpec:
    """
    One simulation model at a given dimension

    Attributes:
        model: 'a', 'b' or 'c'
        d1: Number of conditioning variables X
        seed: 64-bit seed of the sample stream
    """

    model: str
    d1: int
    seed: int = 0

    def __post_init__(self):
        model = str(self.model).strip().lower()
        if model not in MODELS:
            raise InvalidInput(f"Unknown model '{self.model}'. Available models: {list(MODELS)}")
        if self.d1 < 1:
            raise InvalidInput(f"Models need d1 >= 1, got {self.d1}")
        object.__setattr__(self, 'model', model)

    @property
    def d2(self) -> int:
        return 2 if self.model == 'a' else 1

    @property
    def d(self) -> int:
        return self.d1 + self.d2

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(self.model, self.d1, seed)

    def with_d1(self, d1: int) -> "ModelSpec":
        return ModelSpec(self.model, d1, self.seed)


def default_point(spec: ModelSpec) -> EvalPoint:
    """Set point used for reconstructions: x = 0 with y = (0, 0.4) for model a, w = 0 otherwise"""
    w = np.zeros(spec.d)
    if spec.model == 'a':
        w[-1] = 0.4
    return EvalPoint(w)


def _draw(spec: ModelSpec):
    d1 = spec.d1

    def draw(gen: np.random.Generator, rows: int) -> np.ndarray:
        if spec.model == 'a':
            y2 = IG_SCALE / gen.gamma(IG_SHAPE, 1.0, rows)
            scale = np.sqrt(y2)
            y1 = scale * gen.standard_normal(rows)
            x = y1[:, None] + scale[:, None] * gen.standard_normal((rows, d1))
            return np.column_stack([x, y1, y2])
        if spec.model == 'b':
            x = gen.standard_normal((rows, d1))
        else:
            x = gen.uniform(-1.0, 1.0, (rows, d1))
        y = 3.0 * x[:, 0] ** 3 + NOISE_SD * gen.standard_normal(rows)
        return np.column_stack([x, y])

    return draw


def sample_model(spec: ModelSpec, n: int, workers: Optional[int] = None, stream: int = STREAM_SAMPLE) -> Sample:
    """
    Draw n observations (X_1..X_d1, Y_1[, Y_2]) from the model

    Args:
        spec: Model, dimension and seed
        n: Sample size
        workers: Threads used to generate row chunks
        stream: Stream id, so evaluation points or auxiliary samples never reuse sample draws

    Returns:
        Sample with d1 = spec.d1; identical for identical (spec, n, stream)
    """
    if n < 1:
        raise InvalidInput(f"Sample size must be positive, got {n}")
    data = generate_rows(spec.seed, stream, n, _draw(spec), workers=workers)
    logger.debug(f"Sampled model {spec.model} with d1={spec.d1}, n={n}, seed={spec.seed}")
    return Sample(data, d1=spec.d1)


def sample_marginal_x(spec: ModelSpec, n: int, workers: Optional[int] = None) -> np.ndarray:
    """n draws of X alone, on the auxiliary stream"""
    return np.array(sample_model(spec, n, workers=workers, stream=STREAM_AUX).x)


def _as_rows(spec: ModelSpec, points, width: int) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(points.w if isinstance(points, EvalPoint) else points, dtype=float))
    if rows.shape[1] != width:
        raise DimensionMismatch(f"Model {spec.model} with d1={spec.d1} expects {width} columns, got {rows.shape[1]}")
    return rows


def _beta1(x: np.ndarray, d1: int) -> np.ndarray:
    total = x.sum(axis=1)
    return 0.5 * (6.0 + np.sum(x * x, axis=1) - total * total / (d1 + 1))


def true_density_many(spec: ModelSpec, points) -> np.ndarray:
    """Conditional density f(x, y) at each row of an m×d array"""
    w = _as_rows(spec, points, spec.d)
    d1 = spec.d1
    x = w[:, :d1]
    if spec.model == 'a':
        y1, y2 = w[:, d1], w[:, d1 + 1]
        out = np.zeros(len(w))
        positive = y2 > 0.0
        if np.any(positive):
            xp, y1p, y2p = x[positive], y1[positive], y2[positive]
            alpha = IG_SHAPE + d1 / 2.0
            beta1 = _beta1(xp, d1)
            centre = xp.sum(axis=1) / (d1 + 1)
            log_f = (
                0.5 * math.log(d1 + 1) - 0.5 * math.log(2.0 * math.pi) - gammaln(alpha)
                + alpha * np.log(beta1)
                - (5.0 + (d1 + 1) / 2.0) * np.log(y2p)
                - beta1 / y2p
                - (y1p - centre) ** 2 * (d1 + 1) / (2.0 * y2p)
            )
            out[positive] = np.exp(log_f)
        return out

    y = w[:, d1]
    values = np.exp(LOG_SQRT_2_OVER_PI - 2.0 * (y - 3.0 * x[:, 0] ** 3) ** 2)
    if spec.model == 'c':
        values = np.where(np.all(np.abs(x) <= 1.0, axis=1), values, 0.0)
    return values


def true_density(spec: ModelSpec, w: EvalPoint) -> float:
    """
    Closed-form conditional density of the model at w = (x, y)

    Args:
        spec: Model and dimension
        w: Point of length spec.d

    Returns:
        f(x, y); 0 where the indicators vanish (y2 <= 0 for model a, x outside the cube for model c)
    """
    return float(true_density_many(spec, w)[0])


def marginal_density(spec: ModelSpec, x) -> np.ndarray:
    """
    Exact density of X at each row of an m×d1 array

    Model a integrates the IG(4, 3) variance out of N(0, v (I + 11ᵀ)); model b is a
    product of standard normals; model c is uniform on [-1, 1]^d1.
    """
    x = _as_rows(spec, x, spec.d1)
    d1 = spec.d1
    if spec.model == 'a':
        alpha = IG_SHAPE + d1 / 2.0
        log_f = (
            gammaln(alpha) + IG_SHAPE * math.log(IG_SCALE) - gammaln(IG_SHAPE)
            - 0.5 * d1 * math.log(2.0 * math.pi) - 0.5 * math.log(d1 + 1)
            - alpha * np.log(_beta1(x, d1))
        )
        return np.exp(log_f)
    if spec.model == 'b':
        return np.exp(-0.5 * np.sum(x * x, axis=1) - 0.5 * d1 * math.log(2.0 * math.pi))
    return np.where(np.all(np.abs(x) <= 1.0, axis=1), 2.0 ** -d1, 0.0)
