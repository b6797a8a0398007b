#!/usr/bin/env python3
"""
Univariate smoothing kernels

Each kernel carries its value, its derivative and its log-value, together with the
order and support information the bandwidth selector needs. The L1/L2/sup norms of
K and of J(t) = K(t) + tK'(t) are computed once per kernel by adaptive quadrature.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Tuple

import numpy as np
from scipy import integrate, optimize

from .errors import InvalidInput, NonConvergence

logger = logging.getLogger(__name__)

# Unbounded kernels are truncated here for quadrature; tails beyond are below 1e-30
EFFECTIVE_SUPPORT = 12.0
QUADRATURE_TOLERANCE = 1e-8
SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Kernel(ABC):
    """
    A univariate C¹ kernel integrating to one

    Attributes:
        name: Registry identifier ("gaussian", "biweight")
        order: Order p: the moments of order 1..p-1 vanish
        support_radius: Half-width of the support (math.inf when unbounded)
        j_roots: Zeros of J, used as quadrature breakpoints for |J|
    """

    name: str
    order: int
    support_radius: float
    j_roots: Tuple[float, ...]

    @abstractmethod
    def evaluate(self, t):
        """K(t), elementwise"""

    @abstractmethod
    def derivative(self, t):
        """K'(t), elementwise"""

    def log_evaluate(self, t):
        """log K(t), elementwise (-inf outside the support)"""
        with np.errstate(divide='ignore'):
            return np.log(self.evaluate(t))

    @property
    def effective_radius(self) -> float:
        """Integration half-width: the support radius, capped for unbounded kernels"""
        return min(self.support_radius, EFFECTIVE_SUPPORT)

    @property
    def is_compact(self) -> bool:
        return math.isfinite(self.support_radius)


@dataclass(frozen=True)
class GaussianKernel(Kernel):
    """Standard normal density, order 2, unbounded support"""

    name: str = "gaussian"
    order: int = 2
    support_radius: float = math.inf
    j_roots: Tuple[float, ...] = (-1.0, 1.0)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-0.5 * t * t) / SQRT_2PI

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return -t * self.evaluate(t)

    def log_evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return -0.5 * t * t - math.log(SQRT_2PI)


@dataclass(frozen=True)
class BiweightKernel(Kernel):
    """Quartic kernel 15/16 (1 - t²)² on [-1, 1], order 2, compact support"""

    name: str = "biweight"
    order: int = 2
    support_radius: float = 1.0
    j_roots: Tuple[float, ...] = (-1.0 / math.sqrt(5.0), 1.0 / math.sqrt(5.0))

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) <= 1.0
        return np.where(inside, 0.9375 * (1.0 - t * t) ** 2, 0.0)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) <= 1.0
        return np.where(inside, -3.75 * t * (1.0 - t * t), 0.0)


KERNELS: Dict[str, Kernel] = {
    'gaussian': GaussianKernel(),
    'biweight': BiweightKernel(),
}


def get_kernel(name: str) -> Kernel:
    """
    Look a kernel up by its registry name

    Args:
        name: Kernel identifier, case-insensitive

    Returns:
        The shared immutable kernel instance
    """
    try:
        return KERNELS[name.strip().lower()]
    except KeyError:
        raise InvalidInput(f"Unknown kernel '{name}'. Available kernels: {sorted(KERNELS)}") from None


def j_function(kernel: Kernel, t):
    """J(t) = K(t) + t K'(t), elementwise"""
    t = np.asarray(t, dtype=float)
    return kernel.evaluate(t) + t * kernel.derivative(t)


@dataclass(frozen=True)
class KernelNorms:
    """L1, L2 and sup norms of K and J"""

    k_l1: float
    k_l2: float
    k_sup: float
    j_l1: float
    j_l2: float
    j_sup: float


def _integrate(func: Callable[[float], float], kernel: Kernel, label: str) -> float:
    radius = kernel.effective_radius
    breakpoints = [p for p in kernel.j_roots if -radius < p < radius] + [0.0]
    value, error = integrate.quad(
        func, -radius, radius,
        points=sorted(set(breakpoints)), limit=200, epsabs=1e-13, epsrel=1e-12,
    )
    if error > QUADRATURE_TOLERANCE:
        raise NonConvergence(
            f"Quadrature of {label} for kernel '{kernel.name}' has error estimate {error:.3e}"
        )
    return value


def _sup_norm(func: Callable, kernel: Kernel) -> float:
    radius = kernel.effective_radius
    grid = np.linspace(-radius, radius, 24001)
    values = np.abs(func(grid))
    peak = int(np.argmax(values))
    step = grid[1] - grid[0]
    lo, hi = grid[max(peak - 1, 0)], grid[min(peak + 1, grid.size - 1)]
    if hi - lo < step:
        return float(values[peak])
    refined = optimize.minimize_scalar(
        lambda t: -abs(float(func(t))), bounds=(lo, hi), method='bounded',
        options={'xatol': 1e-12},
    )
    return max(float(values[peak]), -float(refined.fun))


@lru_cache(maxsize=None)
def compute_norms(kernel: Kernel) -> KernelNorms:
    """
    Compute the six norms of K and J by adaptive quadrature

    Results are cached per kernel; kernels are immutable so the cache never goes stale.

    Args:
        kernel: Kernel to measure

    Returns:
        KernelNorms with strictly positive entries

    Raises:
        NonConvergence: a quadrature error estimate exceeds 1e-8
    """
    def k_abs(t):
        return abs(float(kernel.evaluate(t)))

    def j_abs(t):
        return abs(float(j_function(kernel, t)))

    norms = KernelNorms(
        k_l1=_integrate(k_abs, kernel, "|K|"),
        k_l2=math.sqrt(_integrate(lambda t: k_abs(t) ** 2, kernel, "K²")),
        k_sup=_sup_norm(kernel.evaluate, kernel),
        j_l1=_integrate(j_abs, kernel, "|J|"),
        j_l2=math.sqrt(_integrate(lambda t: j_abs(t) ** 2, kernel, "J²")),
        j_sup=_sup_norm(lambda t: j_function(kernel, t), kernel),
    )
    logger.debug(f"Norms for kernel '{kernel.name}': {norms}")
    return norms


def c_lambda(norms: KernelNorms, d: int) -> float:
    """
    Threshold constant C_λ = 4 ‖J‖₂ ‖K‖₂^(d-1)

    Args:
        norms: Norms of the kernel in use
        d: Total dimension d = d1 + d2

    Returns:
        The constant multiplying every threshold
    """
    if d < 1:
        raise InvalidInput(f"Dimension must be at least 1, got {d}")
    return 4.0 * norms.j_l2 * norms.k_l2 ** (d - 1)
