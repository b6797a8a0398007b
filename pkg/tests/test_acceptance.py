"""
End-to-end checks at realistic sample sizes; run with `pytest -m slow`
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrodeo.estimator import EvalPoint, MarginalValues, Sample, z_statistics
from cdrodeo.experiments import ExperimentSettings, bench, reconstruct, sparsity, sweep_a, sweep_beta
from cdrodeo.experiments.bench import z_evaluation_bound
from cdrodeo.experiments.calibration import best_a
from cdrodeo.experiments.reconstruction import rmse
from cdrodeo.experiments.runner import build_marginal, estimate_at
from cdrodeo.experiments.sparsity import bandwidth_medians, irrelevant_components
from cdrodeo.kernels import KERNELS
from cdrodeo.models import ModelSpec, marginal_density, sample_model
from cdrodeo.rng import derive_seed
from cdrodeo.rodeo import RodeoConfig, Variant, run_rodeo
from test_rodeo import check_path, normal_marginal

pytestmark = pytest.mark.slow

TRUE_AT_ORIGIN = math.sqrt(2.0 / math.pi)
# Model b, d = 4, n = 20000, 41 points on [-2, 2] in y
RECONSTRUCTION_RMSE_BOUND = 0.1


def test_irrelevant_statistics_have_zero_mean():
    spec = ModelSpec('b', 3)
    h = np.full(4, 0.3)
    w = EvalPoint(np.zeros(4))
    irrelevant = irrelevant_components('b', 3)
    draws = []
    for s in range(200):
        sample = sample_model(spec.with_seed(derive_seed(99, s)), 2000)
        marginal = MarginalValues(marginal_density(spec, sample.x))
        draws.append(z_statistics(sample, marginal, h, w, KERNELS['gaussian'], irrelevant))
    draws = np.array(draws)
    mean = draws.mean(axis=0)
    standard_error = draws.std(axis=0, ddof=1) / math.sqrt(len(draws))
    assert np.all(np.abs(mean) <= 3.0 * standard_error)


@pytest.fixture(scope='module')
def sparse_runs():
    settings_ = ExperimentSettings(model='b', d1_grid=(4,), replicates=50, n=100000, seed=20240101,
                                   marginal='known', no_timing=True)
    return sparsity(settings_)


def test_irrelevant_bandwidths_climb(sparse_runs):
    h = sparse_runs[['h2', 'h3', 'h4']].to_numpy()
    beta = 0.8
    assert np.all(np.median(h, axis=0) > beta)
    assert np.mean(np.all(h > beta, axis=1)) >= 0.8
    assert np.all(h <= 1.0 / beta)


def test_pointwise_accuracy_at_origin(sparse_runs):
    assert np.all(sparse_runs['true_density'] == pytest.approx(TRUE_AT_ORIGIN))
    assert float(np.median(sparse_runs['abs_error'])) < 0.15


def test_running_time_is_near_linear_in_n():
    report = bench(ExperimentSettings(model='b', d1=3, n_grid=(10000, 20000, 40000, 80000), d1_grid=(3,),
                                      n=10000, bench_repeats=3, threads=1))
    assert 0.9 <= report.slope <= 1.35
    for row in report.table.itertuples():
        assert row.z_evaluations <= z_evaluation_bound(row.n, row.d, 0.8)



def test_estimated_marginal_stays_within_monte_carlo_band():
    run = ExperimentSettings(model='b', d1=1, n=2000, preestimator_c=1.5, threads=1)
    w = EvalPoint(np.zeros(2))
    known, estimated = [], []
    for r in range(20):
        spec = run.model_spec(seed=derive_seed(7, r))
        sample = sample_model(spec, run.n)
        for source, out in (('known', known), ('preestimator', estimated)):
            marginal = build_marginal(run, sample, spec, source=source, workers=1)
            out.append(estimate_at(sample, marginal, w, run).estimate)
    band = 3.0 * np.std(known, ddof=1) / math.sqrt(len(known))
    assert abs(np.mean(estimated) - np.mean(known)) < band


def test_best_a_is_near_log_d_minus_one():
    run = ExperimentSettings(model='b', d1=3, n=50000, a_grid=tuple(0.25 * k for k in range(13)),
                             samples=4, points=10, seed=314, no_timing=True)
    assert abs(best_a(sweep_a(run).summary) - math.log(3.0)) <= 0.75


def test_fine_grid_ratio_costs_more_time():
    run = ExperimentSettings(model='b', d1=3, n=20000, beta_grid=(0.5, 0.9), samples=3, threads=1)
    summary = sweep_beta(run).summary.set_index('beta')
    assert summary.loc[0.9, 'mean_wall_time_ms'] > summary.loc[0.5, 'mean_wall_time_ms']
    assert np.all(np.isfinite(summary['mean_abs_error']))


def test_relevant_bandwidths_do_not_depend_on_d():
    run = ExperimentSettings(model='b', d1_grid=(1, 4), replicates=10, n=50000, seed=2718, no_timing=True)
    medians = bandwidth_medians(sparsity(run), 'b').set_index('d1')
    for column in ('relevant_x1', 'relevant_y1'):
        low, high = medians.loc[1, column], medians.loc[4, column]
        assert abs(low - high) / max(low, high) < 0.25


def test_reconstruction_along_y_at_origin():
    run = ExperimentSettings(model='b', d1=3, n=20000, direction='y', grid_min=-2.0, grid_max=2.0,
                             grid_points=41, seed=42, no_timing=True)
    df = reconstruct(run)
    assert len(df) == 41
    assert rmse(df) < RECONSTRUCTION_RMSE_BOUND
    assert float(df['estimate'].max()) == pytest.approx(TRUE_AT_ORIGIN, abs=0.2)


@settings(max_examples=500, deadline=None)
@given(
    seed=st.integers(0, 2 ** 32 - 1),
    d1=st.integers(0, 4),
    d2=st.integers(1, 2),
    n=st.integers(20, 500),
    beta=st.floats(0.5, 0.95),
    variant=st.sampled_from(list(Variant)),
    guard=st.sampled_from(['active', 'all']),
)
def test_path_invariants_at_scale(seed, d1, d2, n, beta, variant, guard):
    rng = np.random.default_rng(seed)
    sample = Sample(rng.standard_normal((n, d1 + d2)), d1=d1)
    marginal = normal_marginal(sample) if d1 else MarginalValues.unit(n)
    w = EvalPoint(0.5 * rng.standard_normal(sample.d))
    config = RodeoConfig(beta=beta, variant=variant, reverse_guard=guard)
    check_path(run_rodeo(sample, marginal, w, config), sample, marginal, w, config)
