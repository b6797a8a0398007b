#!/usr/bin/env python3
"""
Kernel conditional density estimator and its bandwidth statistics

Implements the estimator that divides each product-kernel term by a marginal
pre-estimate f̃_X(X_i), the derivative statistics Z_hj = ∂f̂_h(w)/∂h_j, the
thresholds λ_hj they are tested against, and the default initial bandwidth h0.
With d1 = 0 and unit marginals this is the ordinary kernel density estimator.
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from .errors import DimensionMismatch, InvalidInput
from .kernels import Kernel, KernelNorms, c_lambda, j_function

logger = logging.getLogger(__name__)

# Above this dimension per-observation products are accumulated in log-space
LOG_SPACE_DIMENSION = 8
# Kernel columns kept per coordinate (committed and trial bandwidth alternate)
COLUMN_CACHE_SIZE = 3


def column_names(d1: int, d2: int) -> List[str]:
    """CSV header names x1..xd1, y1..yd2"""
    return [f"x{j}" for j in range(1, d1 + 1)] + [f"y{j}" for j in range(1, d2 + 1)]


@dataclass(frozen=True, eq=False)
class Sample:
    """
    Observation matrix W = (X, Y)

    Attributes:
        data: n×d array, row i is W_i = (X_i, Y_i)
        d1: Number of conditioning columns (0 for plain density estimation)
    """

    data: np.ndarray
    d1: int

    def __post_init__(self):
        data = np.array(self.data, dtype=float, order='C', copy=True)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidInput(f"Sample must be a non-empty n×d matrix, got shape {data.shape}")
        if not 0 <= self.d1 < data.shape[1]:
            raise InvalidInput(f"d1 must satisfy 0 <= d1 < d = {data.shape[1]}, got {self.d1}")
        if not np.all(np.isfinite(data)):
            raise InvalidInput("Sample contains NaN or infinite entries")
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @property
    def d2(self) -> int:
        return self.d - self.d1

    @property
    def x(self) -> np.ndarray:
        return self.data[:, :self.d1]

    @property
    def y(self) -> np.ndarray:
        return self.data[:, self.d1:]

    @property
    def columns(self) -> List[str]:
        return column_names(self.d1, self.d2)

    def head(self, columns: int, d1: int) -> "Sample":
        """Sub-sample made of the first `columns` columns, reinterpreted with a new d1"""
        return Sample(self.data[:, :columns], d1=d1)

    def to_csv(self, filename: Union[str, Path], float_format: str = '%.17g'):
        """Save the sample with header x1,...,xd1,y1[,y2]"""
        df = pd.DataFrame(self.data, columns=self.columns)
        df.to_csv(filename, index=False, float_format=float_format)
        logger.info(f"Saved sample of {self.n} rows to {filename}")

    @classmethod
    def from_csv(cls, filename: Union[str, Path], d1: Optional[int] = None) -> "Sample":
        """
        Load a sample written by `to_csv` (or any numeric CSV)

        Args:
            filename: CSV path
            d1: Conditioning dimension; inferred from x*/y* headers when omitted

        Returns:
            Sample with the file's rows
        """
        df = pd.read_csv(filename, comment='#')
        if d1 is None:
            d1 = sum(1 for name in df.columns if str(name).lower().startswith('x'))
        return cls(df.to_numpy(dtype=float), d1=d1)


@dataclass(frozen=True, eq=False)
class EvalPoint:
    """Estimation point w = (x, y)"""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if w.size < 1 or not np.all(np.isfinite(w)):
            raise InvalidInput(f"Evaluation point must be a finite non-empty vector, got {self.w!r}")
        w.setflags(write=False)
        object.__setattr__(self, 'w', w)

    @property
    def d(self) -> int:
        return self.w.size

    @classmethod
    def parse(cls, text: str) -> "EvalPoint":
        """Parse a comma-separated point such as '0,0,0,0.4'"""
        try:
            return cls([float(v) for v in text.split(',') if v.strip()])
        except ValueError:
            raise InvalidInput(f"Cannot parse evaluation point '{text}'") from None


@dataclass(frozen=True, eq=False)
class Bandwidth:
    """
    Bandwidth on the geometric grid {β^t · h0 : t ∈ ℤ}

    Attributes:
        exponents: Integer t_k per component
        h0: Grid anchor
        beta: Grid ratio in (0, 1)
    """

    exponents: np.ndarray
    h0: float
    beta: float

    def __post_init__(self):
        exponents = np.array(self.exponents, dtype=np.int64).reshape(-1)
        if not 0.0 < self.beta < 1.0:
            raise InvalidInput(f"beta must lie in (0, 1), got {self.beta}")
        if not (self.h0 > 0.0 and math.isfinite(self.h0)):
            raise InvalidInput(f"h0 must be positive and finite, got {self.h0}")
        exponents.setflags(write=False)
        object.__setattr__(self, 'exponents', exponents)

    @classmethod
    def uniform(cls, d: int, h0: float, beta: float) -> "Bandwidth":
        return cls(np.zeros(d, dtype=np.int64), h0, beta)

    @property
    def d(self) -> int:
        return self.exponents.size

    @property
    def values(self) -> np.ndarray:
        return self.h0 * self.beta ** self.exponents.astype(float)

    def with_exponents(self, exponents: np.ndarray) -> "Bandwidth":
        return Bandwidth(exponents, self.h0, self.beta)

    def __len__(self) -> int:
        return self.d


BandwidthLike = Union[Bandwidth, Sequence[float], np.ndarray]


def bandwidth_values(h: BandwidthLike) -> np.ndarray:
    """Component values of a Bandwidth or of a plain positive vector"""
    values = h.values if isinstance(h, Bandwidth) else np.asarray(h, dtype=float).reshape(-1)
    if not np.all(values > 0.0) or not np.all(np.isfinite(values)):
        raise InvalidInput(f"Bandwidth components must be positive and finite, got {values}")
    return values


@dataclass(frozen=True, eq=False)
class MarginalValues:
    """
    Marginal pre-estimates f̃_X(X_i), one per observation

    The constructor floors every entry at n^(-1/2) whatever the source of the values.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size < 1:
            raise InvalidInput("Marginal values must not be empty")
        if np.any(np.isnan(values)) or np.any(values < 0.0):
            raise InvalidInput("Marginal values must be nonnegative numbers")
        values = np.maximum(values, self.floor_for(values.size))
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @staticmethod
    def floor_for(n: int) -> float:
        return 1.0 / math.sqrt(n)

    @classmethod
    def unit(cls, n: int) -> "MarginalValues":
        """f̃_X ≡ 1, the density-estimation case d1 = 0"""
        return cls(np.ones(n))

    @property
    def n(self) -> int:
        return self.values.size


def _check_dimensions(sample: Sample, marginal: MarginalValues, w: EvalPoint, h: Optional[np.ndarray] = None):
    if w.d != sample.d:
        raise DimensionMismatch(f"Evaluation point has length {w.d} but the sample has d = {sample.d}")
    if marginal.n != sample.n:
        raise DimensionMismatch(f"{marginal.n} marginal values for a sample of n = {sample.n}")
    if h is not None and h.size != sample.d:
        raise DimensionMismatch(f"Bandwidth has {h.size} components but the sample has d = {sample.d}")


class ProductKernelEvaluator:
    """
    Evaluates f̂_h(w) and Z_hj for one (sample, marginal, point, kernel)

    The per-coordinate kernel columns h_k^{-1} K((w_k - W_ik)/h_k) are cached by
    bandwidth value, so a step that only moves the active components recomputes only
    those columns. Leave-one-out products come from prefix/suffix accumulations, which
    gives O(n·(d + |components|)) work per Z call and never divides by a kernel value.
    """

    def __init__(self, sample: Sample, marginal: MarginalValues, w: EvalPoint, kernel: Kernel,
                 log_space: Optional[bool] = None):
        """
        Args:
            sample: Observations
            marginal: f̃_X(X_i) values for the same observations
            w: Estimation point
            kernel: Univariate kernel used in every direction
            log_space: Force/disable log-space products (default: d > 8)
        """
        _check_dimensions(sample, marginal, w)
        self.sample = sample
        self.kernel = kernel
        self.n = sample.n
        self.d = sample.d
        self.log_space = self.d > LOG_SPACE_DIMENSION if log_space is None else log_space
        self._diffs = w.w[None, :] - sample.data
        self._inv_marginal = 1.0 / marginal.values
        self._columns: List["OrderedDict[float, np.ndarray]"] = [OrderedDict() for _ in range(self.d)]

    def _column(self, k: int, h_k: float) -> np.ndarray:
        cache = self._columns[k]
        column = cache.get(h_k)
        if column is None:
            t = self._diffs[:, k] / h_k
            if self.log_space:
                column = self.kernel.log_evaluate(t) - math.log(h_k)
            else:
                column = self.kernel.evaluate(t) / h_k
            cache[h_k] = column
            if len(cache) > COLUMN_CACHE_SIZE:
                cache.popitem(last=False)
        else:
            cache.move_to_end(h_k)
        return column

    def _factors(self, h: np.ndarray) -> np.ndarray:
        return np.column_stack([self._column(k, float(h[k])) for k in range(self.d)])

    def estimate(self, h: BandwidthLike) -> float:
        """f̂_h(w)"""
        h = bandwidth_values(h)
        if h.size != self.d:
            raise DimensionMismatch(f"Bandwidth has {h.size} components but the sample has d = {self.d}")
        factors = self._factors(h)
        if self.log_space:
            log_terms = factors.sum(axis=1)
            log_total = logsumexp(log_terms, b=self._inv_marginal)
            return float(np.exp(log_total)) / self.n
        return float(np.sum(np.prod(factors, axis=1) * self._inv_marginal)) / self.n

    def z_statistics(self, h: BandwidthLike, components: Iterable[int]) -> np.ndarray:
        """Z_hj for each requested j, in the order given"""
        h = bandwidth_values(h)
        components = [int(j) for j in components]
        if h.size != self.d:
            raise DimensionMismatch(f"Bandwidth has {h.size} components but the sample has d = {self.d}")
        if any(not 0 <= j < self.d for j in components):
            raise InvalidInput(f"Components {components} out of range 0..{self.d - 1}")
        if not components:
            return np.zeros(0)

        factors = self._factors(h)
        identity = np.zeros if self.log_space else np.ones
        accumulate = np.cumsum if self.log_space else np.cumprod
        # prefix[:, j] combines factors 0..j-1, suffix[:, j] combines factors j+1..d-1
        prefix = np.hstack([identity((self.n, 1)), accumulate(factors, axis=1)[:, :-1]])
        suffix = np.hstack([accumulate(factors[:, ::-1], axis=1)[:, ::-1][:, 1:], identity((self.n, 1))])

        z = np.empty(len(components))
        for slot, j in enumerate(components):
            j_values = j_function(self.kernel, self._diffs[:, j] / h[j]) / (h[j] * h[j])
            if self.log_space:
                with np.errstate(divide='ignore'):
                    log_terms = np.log(np.abs(j_values)) + prefix[:, j] + suffix[:, j]
                weights = np.sign(j_values) * self._inv_marginal
                if not np.any(np.isfinite(log_terms) & (weights != 0.0)):
                    z[slot] = 0.0
                    continue
                log_total, sign = logsumexp(log_terms, b=weights, return_sign=True)
                z[slot] = -float(sign) * float(np.exp(log_total)) / self.n
            else:
                z[slot] = -float(np.sum(j_values * prefix[:, j] * suffix[:, j] * self._inv_marginal)) / self.n
        return z


def estimate(sample: Sample, marginal: MarginalValues, h: BandwidthLike, w: EvalPoint, kernel: Kernel) -> float:
    """
    Kernel conditional density estimate f̂_h(w)

    Args:
        sample: Observations W
        marginal: f̃_X(X_i) values (unit values for density estimation)
        h: Bandwidth (grid Bandwidth or any positive d-vector)
        w: Estimation point
        kernel: Univariate kernel

    Returns:
        (1/n) Σ_i Π_k h_k^{-1} K((w_k - W_ik)/h_k) / f̃_X(X_i)

    Raises:
        DimensionMismatch: inconsistent lengths
    """
    values = bandwidth_values(h)
    _check_dimensions(sample, marginal, w, values)
    return ProductKernelEvaluator(sample, marginal, w, kernel).estimate(values)


def z_statistics(sample: Sample, marginal: MarginalValues, h: BandwidthLike, w: EvalPoint, kernel: Kernel,
                 components: Iterable[int]) -> np.ndarray:
    """
    Derivatives Z_hj = ∂f̂_h(w)/∂h_j for the requested components

    Args:
        sample: Observations W
        marginal: f̃_X(X_i) values
        h: Bandwidth
        w: Estimation point
        kernel: Univariate kernel
        components: 0-based component indices

    Returns:
        Array of Z values in the order of `components`
    """
    values = bandwidth_values(h)
    _check_dimensions(sample, marginal, w, values)
    return ProductKernelEvaluator(sample, marginal, w, kernel).z_statistics(values, components)


def _log_n(n: float) -> float:
    if not n > 1.0:
        raise InvalidInput(f"Sample size must exceed 1 so that log n > 0, got {n}")
    return math.log(n)


def threshold(norms: KernelNorms, h: BandwidthLike, j: int, n: float, a: float, d: int) -> float:
    """
    Threshold λ_hj = C_λ sqrt((log n)^a / (n h_j² Π_k h_k))

    Args:
        norms: Kernel norms
        h: Bandwidth
        j: 0-based component index
        n: Sample size
        a: Threshold exponent
        d: Total dimension

    Returns:
        The threshold for component j

    Raises:
        InvalidInput: log n <= 0
    """
    values = bandwidth_values(h)
    log_n = _log_n(n)
    return c_lambda(norms, d) * math.sqrt(log_n ** a / (n * values[j] ** 2 * float(np.prod(values))))


def thresholds(norms: KernelNorms, h: BandwidthLike, components: Iterable[int], n: float, a: float,
               d: int) -> Dict[int, float]:
    """λ_hj for several components at once, keyed by component"""
    values = bandwidth_values(h)
    base = c_lambda(norms, d) * math.sqrt(_log_n(n) ** a / (n * float(np.prod(values))))
    return {int(j): base / values[int(j)] for j in components}


def default_h0(norms: KernelNorms, n: float, a: float, d: int, p: int) -> float:
    """
    Initial bandwidth C_λ^(2/d) ((log n)^a / n)^(1/(d(2p+1))), clamped to (0, 1]

    Args:
        norms: Kernel norms
        n: Sample size
        a: Threshold exponent
        d: Total dimension
        p: Kernel order

    Returns:
        h0 in (0, 1]
    """
    log_n = _log_n(n)
    value = c_lambda(norms, d) ** (2.0 / d) * (log_n ** a / n) ** (1.0 / (d * (2 * p + 1)))
    return min(value, 1.0)
