#!/usr/bin/env python3
"""
Greedy bandwidth selection for pointwise kernel conditional density estimation

Three procedures share one engine:

- Direct: every component starts at h0 and shrinks by β while |Z_hj| > λ_hj.
- Reverse: every component starts at h0 and grows by 1/β while |Z_hj| <= λ_hj.
- RevDir: an initial test at h0 sends each component either to a Reverse Step
  (components that look flat, typically the irrelevant ones) or to a Direct Step.

Every run returns the selected bandwidth, the estimate at that bandwidth and a full
trace of the bandwidth path.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from .errors import InvalidInput, NumericalFailure
from .estimator import (
    Bandwidth,
    EvalPoint,
    MarginalValues,
    ProductKernelEvaluator,
    Sample,
    default_h0,
    thresholds,
)
from .kernels import KERNELS, Kernel, compute_norms

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    DIRECT = 'direct'
    REVERSE = 'reverse'
    REVDIR = 'revdir'


class Phase(str, Enum):
    INIT = 'init'
    REVERSE = 'reverse'
    DIRECT = 'direct'


class StopReason(str, Enum):
    ALL_DEACTIVATED = 'all_deactivated'
    REVERSE_CAP = 'reverse_cap'
    PRODUCT_FLOOR = 'product_floor'
    SAFETY_CAP = 'safety_cap'


REVERSE_GUARDS = ('active', 'all')
REVERSE_CAPS = ('beta', 'inverse_log')
DIRECT_FLOORS = ('auto', 'log', 'log_a')


def default_a(d: int) -> float:
    """
    Threshold exponent tuned by dimension: -1 for d = 1, log(d - 1) otherwise

    Args:
        d: Total dimension

    Returns:
        The exponent a
    """
    if d < 1:
        raise InvalidInput(f"Dimension must be at least 1, got {d}")
    return -1.0 if d == 1 else math.log(d - 1)


@dataclass(frozen=True)
class RodeoConfig:
    """
    Tuning of one bandwidth selection run

    Attributes:
        a: Threshold exponent; None picks default_a(d)
        beta: Step factor in (0, 1)
        h0: Initial bandwidth in (0, 1]; None picks default_h0
        kernel: Univariate kernel
        variant: direct, reverse or revdir
        max_iterations: Safety cap on loop passes; None picks 10·d·ceil(log_{1/β} n)
        reverse_guard: 'active' tests the Reverse guard on active components only, 'all' on every component
        reverse_cap: 'beta' stops the Reverse Step above β, 'inverse_log' above 1/log n
        direct_floor: 'auto' (variant default), 'log' for (log n)/n, 'log_a' for (log n)^(1+a)/n
        threshold_scale: Multiplier applied to every λ (1 in normal use)
    """

    a: Optional[float] = None
    beta: float = 0.8
    h0: Optional[float] = None
    kernel: Kernel = KERNELS['gaussian']
    variant: Variant = Variant.REVDIR
    max_iterations: Optional[int] = None
    reverse_guard: str = 'active'
    reverse_cap: str = 'beta'
    direct_floor: str = 'auto'
    threshold_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise InvalidInput(f"beta must lie in (0, 1), got {self.beta}")
        if self.h0 is not None and not 0.0 < self.h0 <= 1.0:
            raise InvalidInput(f"h0 must lie in (0, 1], got {self.h0}")
        if self.a is not None and not math.isfinite(self.a):
            raise InvalidInput(f"a must be finite, got {self.a}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InvalidInput(f"max_iterations must be positive, got {self.max_iterations}")
        if self.reverse_guard not in REVERSE_GUARDS:
            raise InvalidInput(f"reverse_guard must be one of {REVERSE_GUARDS}, got '{self.reverse_guard}'")
        if self.reverse_cap not in REVERSE_CAPS:
            raise InvalidInput(f"reverse_cap must be one of {REVERSE_CAPS}, got '{self.reverse_cap}'")
        if self.direct_floor not in DIRECT_FLOORS:
            raise InvalidInput(f"direct_floor must be one of {DIRECT_FLOORS}, got '{self.direct_floor}'")
        if not self.threshold_scale >= 0.0:
            raise InvalidInput(f"threshold_scale must be nonnegative, got {self.threshold_scale}")
        object.__setattr__(self, 'variant', Variant(self.variant))

    def resolve_a(self, d: int) -> float:
        return default_a(d) if self.a is None else float(self.a)

    def resolve_h0(self, n: int, d: int, a: float) -> float:
        if self.h0 is not None:
            return float(self.h0)
        return default_h0(compute_norms(self.kernel), n, a, d, self.kernel.order)

    def safety_cap(self, n: int, d: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return 10 * d * math.ceil(math.log(n) / math.log(1.0 / self.beta))

    def product_floor(self, n: int, a: float, variant: Variant) -> float:
        rule = self.direct_floor
        if rule == 'auto':
            rule = 'log' if variant == Variant.DIRECT else 'log_a'
        log_n = math.log(n)
        return log_n / n if rule == 'log' else log_n ** (1.0 + a) / n

    def reverse_limit(self, n: int) -> float:
        return self.beta if self.reverse_cap == 'beta' else 1.0 / math.log(n)


@dataclass(frozen=True, eq=False)
class IterationRecord:
    """One step of the bandwidth path"""

    t: int
    phase: Phase
    active_set: FrozenSet[int]
    tested_bandwidth: Bandwidth
    z_values: Dict[int, float]
    lambda_values: Dict[int, float]
    committed_bandwidth: Bandwidth


@dataclass
class RodeoTrace:
    """Ordered record of a run and why it stopped"""

    iterations: List[IterationRecord] = field(default_factory=list)
    stop_reason: Optional[StopReason] = None
    reverse_stop_reason: Optional[StopReason] = None

    @property
    def z_evaluations(self) -> int:
        return sum(len(record.z_values) for record in self.iterations)

    def phase(self, phase: Phase) -> List[IterationRecord]:
        return [record for record in self.iterations if record.phase == phase]

    @property
    def loop_iterations(self) -> int:
        return sum(1 for record in self.iterations if record.phase != Phase.INIT)


@dataclass(frozen=True, eq=False)
class RodeoResult:
    """
    Outcome of a run

    Attributes:
        bandwidth: Selected bandwidth ĥ
        estimate: f̂_ĥ(w)
        trace: Bandwidth path
        deactivation_times: Grid exponent t_k of each selected component
        a: Threshold exponent actually used
    """

    bandwidth: Bandwidth
    estimate: float
    trace: RodeoTrace
    deactivation_times: np.ndarray
    a: float

    @property
    def stop_reason(self) -> StopReason:
        return self.trace.stop_reason

    @property
    def h0(self) -> float:
        return self.bandwidth.h0


class _RodeoRun:
    """State shared by the phases of one run"""

    def __init__(self, sample: Sample, marginal: MarginalValues, w: EvalPoint, config: RodeoConfig,
                 variant: Variant):
        if sample.n < 2:
            raise InvalidInput(f"Bandwidth selection needs n >= 2 so that log n > 0, got n = {sample.n}")
        self.config = config
        self.variant = variant
        self.n = sample.n
        self.d = sample.d
        self.norms = compute_norms(config.kernel)
        self.a = config.resolve_a(self.d)
        self.h0 = config.resolve_h0(self.n, self.d, self.a)
        self.evaluator = ProductKernelEvaluator(sample, marginal, w, config.kernel)
        self.cap = config.safety_cap(self.n, self.d)
        self.trace = RodeoTrace()
        self.start = Bandwidth.uniform(self.d, self.h0, config.beta)

    def test(self, h: Bandwidth, components: Iterable[int]) -> Tuple[Dict[int, float], Dict[int, float]]:
        components = sorted(components)
        z = self.evaluator.z_statistics(h, components)
        lam = thresholds(self.norms, h, components, self.n, self.a, self.d)
        z_values = {j: float(z_j) for j, z_j in zip(components, z)}
        lambda_values = {j: self.config.threshold_scale * lam[j] for j in components}
        if any(math.isnan(v) for v in z_values.values()) or any(math.isnan(v) for v in lambda_values.values()):
            raise NumericalFailure(f"NaN statistic at bandwidth {h.values} (Z = {z_values}, λ = {lambda_values})")
        return z_values, lambda_values

    def record(self, t: int, phase: Phase, active: Iterable[int], tested: Bandwidth, z_values: Dict[int, float],
               lambda_values: Dict[int, float], committed: Bandwidth):
        record = IterationRecord(t, phase, frozenset(active), tested, z_values, lambda_values, committed)
        self.trace.iterations.append(record)
        logger.debug(f"[{phase.value} t={t}] active={sorted(record.active_set)} h={committed.values}")

    def over_cap(self) -> bool:
        if self.trace.loop_iterations < self.cap:
            return False
        logger.warning(f"Safety cap of {self.cap} iterations reached (n={self.n}, d={self.d}); stopping early")
        return True

    def initial_split(self) -> Tuple[FrozenSet[int], FrozenSet[int]]:
        z_values, lambda_values = self.test(self.start, range(self.d))
        reverse_set = frozenset(k for k in range(self.d) if abs(z_values[k]) <= lambda_values[k])
        direct_set = frozenset(range(self.d)) - reverse_set
        self.record(-1, Phase.INIT, reverse_set, self.start, z_values, lambda_values, self.start)
        self.record(0, Phase.INIT, direct_set, self.start, {}, {}, self.start)
        return reverse_set, direct_set

    def reverse_step(self, current: Bandwidth, active: FrozenSet[int]) -> Tuple[Bandwidth, StopReason]:
        limit = self.config.reverse_limit(self.n)
        t = -1
        while active:
            guarded = active if self.config.reverse_guard == 'active' else range(self.d)
            if max(current.values[k] for k in guarded) > limit:
                return current, StopReason.REVERSE_CAP
            if self.over_cap():
                return current, StopReason.SAFETY_CAP
            trial_exponents = current.exponents.copy()
            trial_exponents[list(active)] -= 1
            trial = current.with_exponents(trial_exponents)
            z_values, lambda_values = self.test(trial, active)
            active = frozenset(k for k in active if abs(z_values[k]) <= lambda_values[k])
            committed_exponents = current.exponents.copy()
            committed_exponents[list(active)] -= 1
            committed = current.with_exponents(committed_exponents)
            self.record(t, Phase.REVERSE, active, trial, z_values, lambda_values, committed)
            current = committed
            t -= 1
        return current, StopReason.ALL_DEACTIVATED

    def direct_step(self, current: Bandwidth, active: FrozenSet[int], floor: float) -> Tuple[Bandwidth, StopReason]:
        t = 0
        while active and float(np.prod(current.values)) >= floor:
            if self.over_cap():
                return current, StopReason.SAFETY_CAP
            t += 1
            z_values, lambda_values = self.test(current, active)
            active = frozenset(k for k in active if abs(z_values[k]) > lambda_values[k])
            exponents = current.exponents.copy()
            exponents[list(active)] += 1
            committed = current.with_exponents(exponents)
            self.record(t, Phase.DIRECT, active, current, z_values, lambda_values, committed)
            current = committed
        return current, StopReason.ALL_DEACTIVATED if not active else StopReason.PRODUCT_FLOOR

    def finish(self, bandwidth: Bandwidth, stop_reason: StopReason) -> RodeoResult:
        self.trace.stop_reason = stop_reason
        estimate = self.evaluator.estimate(bandwidth)
        if not math.isfinite(estimate):
            raise NumericalFailure(f"Non-finite estimate {estimate} at bandwidth {bandwidth.values}")
        if stop_reason == StopReason.SAFETY_CAP:
            logger.info(f"Run stopped by the safety cap at bandwidth {bandwidth.values}")
        return RodeoResult(bandwidth, estimate, self.trace, bandwidth.exponents.copy(), self.a)


def run_direct(sample: Sample, marginal: MarginalValues, w: EvalPoint, config: RodeoConfig) -> RodeoResult:
    """
    Direct procedure: shrink active components by β while |Z_hj| > λ_hj

    Stops when every component is deactivated or when Π_k h_k falls below the floor
    ((log n)/n unless `config.direct_floor` says otherwise).

    Args:
        sample: Observations
        marginal: f̃_X(X_i) values
        w: Estimation point
        config: Run tuning

    Returns:
        RodeoResult with the selected bandwidth, estimate and trace
    """
    run = _RodeoRun(sample, marginal, w, config, Variant.DIRECT)
    run.record(0, Phase.INIT, range(run.d), run.start, {}, {}, run.start)
    floor = config.product_floor(run.n, run.a, Variant.DIRECT)
    bandwidth, reason = run.direct_step(run.start, frozenset(range(run.d)), floor)
    return run.finish(bandwidth, reason)


def run_reverse(sample: Sample, marginal: MarginalValues, w: EvalPoint, config: RodeoConfig) -> RodeoResult:
    """
    Reverse procedure: every component enters the Reverse Step directly

    Args:
        sample: Observations
        marginal: f̃_X(X_i) values
        w: Estimation point
        config: Run tuning

    Returns:
        RodeoResult; committed components never decrease
    """
    run = _RodeoRun(sample, marginal, w, config, Variant.REVERSE)
    everything = frozenset(range(run.d))
    run.record(-1, Phase.INIT, everything, run.start, {}, {}, run.start)
    run.record(0, Phase.INIT, frozenset(), run.start, {}, {}, run.start)
    bandwidth, reason = run.reverse_step(run.start, everything)
    run.trace.reverse_stop_reason = reason
    return run.finish(bandwidth, reason)


def run_revdir(sample: Sample, marginal: MarginalValues, w: EvalPoint, config: RodeoConfig) -> RodeoResult:
    """
    RevDir procedure: initial split, Reverse Step, then Direct Step

    Components with |Z| <= λ at (h0, ..., h0) grow by 1/β while they stay flat and the
    guard max ĥ_k <= β holds; the others then shrink by β while |Z| > λ and
    Π_k ĥ_k >= (log n)^(1+a)/n.

    Args:
        sample: Observations
        marginal: f̃_X(X_i) values
        w: Estimation point
        config: Run tuning

    Returns:
        RodeoResult with the selected bandwidth, estimate and trace

    Raises:
        NumericalFailure: a statistic or threshold is NaN
        InvalidInput: n <= 1
    """
    run = _RodeoRun(sample, marginal, w, config, Variant.REVDIR)
    reverse_set, direct_set = run.initial_split()
    bandwidth, reason = run.reverse_step(run.start, reverse_set)
    run.trace.reverse_stop_reason = reason
    if reason != StopReason.SAFETY_CAP and direct_set:
        floor = config.product_floor(run.n, run.a, Variant.REVDIR)
        bandwidth, reason = run.direct_step(bandwidth, direct_set, floor)
    return run.finish(bandwidth, reason)


RUNNERS = {
    Variant.DIRECT: run_direct,
    Variant.REVERSE: run_reverse,
    Variant.REVDIR: run_revdir,
}


def run_rodeo(sample: Sample, marginal: MarginalValues, w: EvalPoint, config: RodeoConfig) -> RodeoResult:
    """Run the procedure named by `config.variant`"""
    return RUNNERS[config.variant](sample, marginal, w, config)
