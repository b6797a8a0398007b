import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from cdrodeo.errors import DimensionMismatch, InvalidInput, NumericalFailure
from cdrodeo.estimator import EvalPoint
from cdrodeo.experiments import (
    ExperimentSettings,
    bench,
    estimate_point,
    load_config_file,
    marginal_pipeline,
    reconstruct,
    resolve_settings,
    sparsity,
    sweep_a,
    sweep_beta,
)
from cdrodeo.experiments.bench import loglog_slope, z_evaluation_bound
from cdrodeo.experiments.calibration import SWEEP_A_COLUMNS, SWEEP_BETA_COLUMNS, best_a
from cdrodeo.experiments.pointwise import load_sample
from cdrodeo.experiments.reconstruction import direction_index, rmse
from cdrodeo.experiments.runner import build_marginal, companion_path, map_ordered, write_csv
from cdrodeo.experiments.settings import UNSET
from cdrodeo.experiments.sparsity import bandwidth_medians, irrelevant_components, relevant_components
from cdrodeo.models import ModelSpec, sample_model, true_density_many


def small_settings(**overrides) -> ExperimentSettings:
    values = dict(model='b', d1=1, n=300, samples=2, points=3, replicates=2, a_grid=(0.0, 1.0),
                  beta_grid=(0.7, 0.8), threads=1, no_timing=True, seed=11)
    values.update(overrides)
    return ExperimentSettings(**values)


class TestSettings:
    def test_defaults(self):
        settings = ExperimentSettings()
        assert settings.beta == 0.8
        assert settings.marginal == 'known'
        assert settings.a is None

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / 'run.env'
        path.write_text('beta=0.9\nn=500\ngrid-min=-1\na=auto\n', encoding='utf-8')
        settings = resolve_settings({'beta': 0.7, 'n': UNSET, 'command': 'estimate'}, path)
        assert settings.beta == 0.7
        assert settings.n == 500
        assert settings.grid_min == -1.0
        assert settings.a is None

    def test_explicit_auto_flag_overrides_file(self, tmp_path):
        path = tmp_path / 'run.env'
        path.write_text('a=2\nh0=0.5\nthreads=3\nmax-iterations=40\n', encoding='utf-8')
        assert resolve_settings({}, path).a == 2.0

        settings = resolve_settings({'a': None, 'h0': None, 'threads': None, 'max_iterations': None, 'n': UNSET}, path)
        assert settings.a is None
        assert settings.h0 is None
        assert settings.threads is None
        assert settings.max_iterations is None

    def test_unknown_key(self, tmp_path):
        path = tmp_path / 'run.env'
        path.write_text('bandwidth=0.5\n', encoding='utf-8')
        with pytest.raises(InvalidInput):
            load_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidInput):
            load_config_file(tmp_path / 'absent.env')

    def test_unparsable_value(self, tmp_path):
        path = tmp_path / 'run.env'
        path.write_text('n=many\n', encoding='utf-8')
        with pytest.raises(InvalidInput):
            load_config_file(path)

    def test_invalid_procedure_values_fail_early(self):
        with pytest.raises(InvalidInput):
            ExperimentSettings(beta=1.0)
        with pytest.raises(InvalidInput):
            ExperimentSettings(n=1)
        with pytest.raises(InvalidInput):
            ExperimentSettings(preestimator_c=1.0)

    def test_rodeo_config_overrides(self):
        config = small_settings(a=2.0).rodeo_config(beta=0.6)
        assert config.a == 2.0
        assert config.beta == 0.6


class TestRunner:
    def test_map_ordered_keeps_order(self):
        assert map_ordered(lambda i: i * i, [3, 1, 2], threads=3) == [9, 1, 4]

    def test_map_ordered_logs_and_reraises(self, caplog):
        def task(i):
            if i == 2:
                raise NumericalFailure('NaN statistic')
            return i

        with caplog.at_level(logging.ERROR):
            with pytest.raises(NumericalFailure):
                map_ordered(task, [1, 2], threads=1, label=lambda i: f"item {i}")
        assert '[ERROR] item 2 failed' in caplog.text

    def test_companion_path(self):
        assert companion_path(Path('out/r.csv'), 'summary') == Path('out/r_summary.csv')
        assert companion_path(None, 'summary') is None

    def test_write_csv_header(self, tmp_path):
        out = tmp_path / 'nested' / 'r.csv'
        write_csv(pd.DataFrame({'a': [1.5], 'b': [np.nan]}), out, 'estimate')
        assert out.read_text(encoding='utf-8') == '# cdrodeo-csv v1 estimate\na,b\n1.5,\n'

    def test_write_csv_to_stdout(self, capsys):
        write_csv(pd.DataFrame({'a': [2]}), None, 'bench')
        assert capsys.readouterr().out == '# cdrodeo-csv v1 bench\na\n2\n'

    def test_preestimator_aux_sample_is_capped(self, caplog):
        settings = small_settings(marginal='preestimator', aux_cap=500)
        spec = settings.model_spec()
        sample = sample_model(spec, settings.n)
        with caplog.at_level(logging.WARNING):
            values = build_marginal(settings, sample, spec)
        assert values.n == settings.n
        assert 'capped at 500' in caplog.text

    def test_known_marginal_needs_model(self):
        settings = small_settings()
        sample = sample_model(settings.model_spec(), 50)
        with pytest.raises(InvalidInput):
            build_marginal(settings, sample, None)


class TestSweeps:
    def test_sweep_a_layout(self):
        settings = small_settings()
        result = sweep_a(settings)
        assert list(result.table.columns) == SWEEP_A_COLUMNS
        assert len(result.table) == 2 * 2 * 3
        assert len(result.summary) == 2 * 2
        assert set(result.summary['points']) == {3}
        assert np.all(result.table['abs_error'] >= 0.0)
        assert best_a(result.summary) in settings.a_grid

    def test_sweep_a_independent_of_threads(self):
        serial = sweep_a(small_settings(threads=1))
        threaded = sweep_a(small_settings(threads=2))
        pd.testing.assert_frame_equal(serial.table, threaded.table)

    def test_sweep_beta_blanks_timing(self):
        result = sweep_beta(small_settings())
        assert list(result.table.columns) == SWEEP_BETA_COLUMNS
        assert len(result.table) == 2 * 2
        assert result.table['wall_time_ms'].isna().all()
        assert result.summary['mean_wall_time_ms'].isna().all()

    def test_sweep_beta_records_timing(self):
        result = sweep_beta(small_settings(no_timing=False, samples=1))
        assert np.all(result.table['wall_time_ms'] > 0.0)

    def test_best_a(self):
        summary = pd.DataFrame({'a': [0.0, 0.0, 1.0, 1.0], 'sample_id': [0, 1, 0, 1],
                                'mean_abs_error': [0.3, 0.1, 0.2, 0.1], 'points': [3] * 4})
        assert best_a(summary) == 1.0


class TestReconstruction:
    def test_grid_and_truth(self):
        settings = small_settings(grid_min=-1.0, grid_max=1.0, grid_points=5)
        df = reconstruct(settings)
        np.testing.assert_allclose(df['grid_value'], [-1.0, -0.5, 0.0, 0.5, 1.0])
        spec = settings.model_spec()
        points = np.column_stack([np.zeros(5), df['grid_value']])
        np.testing.assert_allclose(df['true_density'], true_density_many(spec, points))
        assert 'estimate_alt' not in df.columns
        assert rmse(df) < 1.0

    def test_compare_marginal_column(self):
        settings = small_settings(grid_points=3, compare_marginal='preestimator', preestimator_c=1.2)
        df = reconstruct(settings)
        assert list(df.columns) == ['grid_value', 'estimate', 'true_density', 'estimate_alt']
        assert np.all(np.isfinite(df['estimate_alt']))

    def test_direction_index(self):
        assert direction_index(['x1', 'x2', 'y1'], 'y') == 2
        assert direction_index(['x1', 'x2', 'y1'], 'x2') == 1
        with pytest.raises(InvalidInput):
            direction_index(['x1', 'y1'], 'y2')

    def test_wrong_point_length(self):
        with pytest.raises(DimensionMismatch):
            reconstruct(small_settings(w=EvalPoint([0.0, 0.0, 0.0])))


class TestSparsity:
    def test_components(self):
        assert relevant_components('b', 3) == [0, 3]
        assert irrelevant_components('b', 3) == [1, 2]
        assert irrelevant_components('a', 2) == []

    def test_table_layout(self):
        df = sparsity(small_settings(d1_grid=(1, 2)))
        assert len(df) == 4
        assert list(df.columns[-3:]) == ['h1', 'h2', 'h3']
        assert df.loc[df['d1'] == 1, 'h3'].isna().all()
        assert df.loc[df['d1'] == 2, 'h3'].notna().all()
        medians = bandwidth_medians(df, 'b')
        assert list(medians['d1']) == [1, 2]
        assert math.isnan(medians['irrelevant_median'].iloc[0])
        assert medians['irrelevant_median'].iloc[1] > 0.0


class TestBench:
    def test_bound_and_slope_helpers(self):
        assert z_evaluation_bound(1000, 4, 0.8) == 4 * 31 + 4
        assert loglog_slope([10, 100], [1.0, 100.0]) == pytest.approx(2.0)

    def test_bench_rows(self):
        report = bench(small_settings(n=200, n_grid=(200, 400), d1_grid=(1, 2), bench_repeats=1))
        assert list(report.table['n']) == [200, 400, 200]
        assert list(report.table['d']) == [2, 2, 3]
        assert report.table['wall_time_ms'].isna().all()
        assert math.isfinite(report.slope)
        for row in report.table.itertuples():
            assert row.z_evaluations <= z_evaluation_bound(row.n, row.d, 0.8)


class TestPointwise:
    def test_estimate_point_row(self):
        df = estimate_point(small_settings())
        assert list(df.columns) == ['w', 'estimate', 'true_density', 'abs_error', 'h1', 'h2',
                                    'stop_reason', 'iterations', 'wall_time_ms']
        assert df['w'].iloc[0] == '0,0'
        assert df['true_density'].iloc[0] == pytest.approx(math.sqrt(2.0 / math.pi))
        assert math.isnan(df['wall_time_ms'].iloc[0])

    def test_estimate_from_input_file(self, tmp_path):
        path = tmp_path / 'data.csv'
        sample_model(ModelSpec('b', 1, seed=2), 200).to_csv(path)
        df = estimate_point(small_settings(input=path, w=EvalPoint([0.0, 0.0]), marginal='chained'))
        assert math.isnan(df['true_density'].iloc[0])
        assert df['estimate'].iloc[0] > 0.0

    def test_input_infers_d1_from_header(self, tmp_path):
        path = tmp_path / 'data.csv'
        sample_model(ModelSpec('b', 2, seed=2), 200).to_csv(path)
        settings = small_settings(d1=None, input=path, w=EvalPoint([0.0, 0.0, 0.0]), marginal='chained')
        sample, spec = load_sample(settings)
        assert spec is None
        assert (sample.d1, sample.d2) == (2, 1)
        assert estimate_point(settings)['estimate'].iloc[0] > 0.0

    def test_explicit_d1_overrides_header(self, tmp_path):
        path = tmp_path / 'data.csv'
        sample_model(ModelSpec('b', 2, seed=2), 50).to_csv(path)
        sample, _ = load_sample(small_settings(d1=1, input=path))
        assert (sample.d1, sample.d2) == (1, 2)

    def test_input_needs_point(self, tmp_path):
        path = tmp_path / 'data.csv'
        sample_model(ModelSpec('b', 1, seed=2), 50).to_csv(path)
        with pytest.raises(InvalidInput):
            estimate_point(small_settings(input=path, marginal='chained'))

    def test_input_rejects_known_marginal(self, tmp_path):
        path = tmp_path / 'data.csv'
        sample_model(ModelSpec('b', 1, seed=2), 50).to_csv(path)
        with pytest.raises(InvalidInput):
            estimate_point(small_settings(input=path, w=EvalPoint([0.0, 0.0])))

    def test_missing_input_file(self, tmp_path):
        with pytest.raises(InvalidInput):
            estimate_point(small_settings(input=tmp_path / 'absent.csv', w=EvalPoint([0.0, 0.0])))

    def test_marginal_pipeline(self):
        report = marginal_pipeline(small_settings(model='c', d1=2, n=80))
        assert list(report.values.columns) == ['index', 'x1', 'x2', 'marginal', 'true_marginal']
        assert len(report.values) == 80
        assert list(report.stages['stage']) == [1, 2]
        assert report.stages['total_time_ms'].isna().all()
