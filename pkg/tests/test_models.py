import math

import numpy as np
import pytest
from scipy import integrate, stats

from cdrodeo.errors import DimensionMismatch, InvalidInput
from cdrodeo.models import (
    ModelSpec,
    default_point,
    marginal_density,
    sample_marginal_x,
    sample_model,
    true_density,
    true_density_many,
)
from cdrodeo.rng import CHUNK_ROWS, derive_seed


class TestModelSpec:
    def test_dimensions(self):
        assert ModelSpec('a', 3).d == 5
        assert ModelSpec('B', 3).d == 4
        assert ModelSpec('B', 3).model == 'b'

    def test_rejects_unknown_model(self):
        with pytest.raises(InvalidInput):
            ModelSpec('z', 2)

    def test_rejects_empty_x(self):
        with pytest.raises(InvalidInput):
            ModelSpec('b', 0)

    def test_default_point(self):
        np.testing.assert_array_equal(default_point(ModelSpec('a', 2)).w, [0.0, 0.0, 0.0, 0.4])
        np.testing.assert_array_equal(default_point(ModelSpec('c', 2)).w, [0.0, 0.0, 0.0])


class TestSampling:
    def test_model_b_moments(self):
        sample = sample_model(ModelSpec('b', 2, seed=11), 20000)
        x, y = sample.x, sample.y[:, 0]
        assert np.all(np.abs(x.mean(axis=0)) < 0.05)
        np.testing.assert_allclose(x.std(axis=0), 1.0, atol=0.03)
        residual = y - 3.0 * x[:, 0] ** 3
        assert residual.std() == pytest.approx(0.5, abs=0.02)
        assert stats.kstest(residual / 0.5, 'norm').pvalue > 1e-3

    def test_model_a_variance_layer(self):
        sample = sample_model(ModelSpec('a', 2, seed=11), 20000)
        y1, y2 = sample.y[:, 0], sample.y[:, 1]
        assert np.all(y2 > 0.0)
        # IG(4, 3) has mean 3 / (4 - 1)
        assert y2.mean() == pytest.approx(1.0, abs=0.03)
        scaled = (sample.x[:, 0] - y1) / np.sqrt(y2)
        assert scaled.std() == pytest.approx(1.0, abs=0.03)

    def test_model_c_support(self):
        sample = sample_model(ModelSpec('c', 3, seed=11), 5000)
        assert np.all(np.abs(sample.x) <= 1.0)
        assert np.all(np.abs(sample.x.mean(axis=0)) < 0.05)

    def test_reproducible(self):
        spec = ModelSpec('b', 2, seed=5)
        np.testing.assert_array_equal(sample_model(spec, 500).data, sample_model(spec, 500).data)
        assert not np.array_equal(sample_model(spec, 500).data, sample_model(spec.with_seed(6), 500).data)

    def test_worker_count_does_not_change_sample(self):
        spec = ModelSpec('a', 3, seed=5)
        n = 2 * CHUNK_ROWS + 17
        np.testing.assert_array_equal(sample_model(spec, n).data, sample_model(spec, n, workers=4).data)

    def test_full_chunks_are_prefix_stable(self):
        spec = ModelSpec('b', 2, seed=5)
        small = sample_model(spec, CHUNK_ROWS)
        large = sample_model(spec, 2 * CHUNK_ROWS)
        np.testing.assert_array_equal(small.data, large.data[:CHUNK_ROWS])

    def test_auxiliary_stream_is_separate(self):
        spec = ModelSpec('b', 2, seed=5)
        aux = sample_marginal_x(spec, 300)
        assert aux.shape == (300, 2)
        assert not np.array_equal(aux, sample_model(spec, 300).x)

    def test_derived_seeds_differ(self):
        assert derive_seed(1, 0) != derive_seed(1, 1)
        assert derive_seed(1, 0) == derive_seed(1, 0)

    def test_rejects_empty_sample(self):
        with pytest.raises(InvalidInput):
            sample_model(ModelSpec('b', 1), 0)


class TestTrueDensity:
    def test_model_b_at_origin(self):
        assert true_density(ModelSpec('b', 3), default_point(ModelSpec('b', 3))) == pytest.approx(
            math.sqrt(2.0 / math.pi), rel=1e-12)

    def test_model_c_vanishes_outside_cube(self):
        spec = ModelSpec('c', 2)
        assert true_density_many(spec, [[1.5, 0.0, 0.0]])[0] == 0.0
        assert true_density_many(spec, [[0.5, 0.0, 0.375]])[0] == pytest.approx(math.sqrt(2.0 / math.pi))

    def test_model_a_vanishes_for_nonpositive_variance(self):
        spec = ModelSpec('a', 1)
        np.testing.assert_array_equal(true_density_many(spec, [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0]]), [0.0, 0.0])

    def test_vectorized_matches_single(self):
        spec = ModelSpec('a', 2)
        points = np.array([[0.1, -0.2, 0.3, 0.4], [1.0, 0.5, -0.5, 2.0]])
        many = true_density_many(spec, points)
        for row, value in zip(points, many):
            assert true_density(spec, row) == pytest.approx(value, rel=1e-14)

    def test_rejects_wrong_width(self):
        with pytest.raises(DimensionMismatch):
            true_density_many(ModelSpec('b', 2), [[0.0, 0.0]])

    @pytest.mark.parametrize('model', ['b', 'c'])
    @pytest.mark.parametrize('x', [-0.7, 0.0, 0.3, 0.9])
    def test_single_response_models_integrate_to_one(self, model, x):
        spec = ModelSpec(model, 1)
        centre = 3.0 * x ** 3
        value, _ = integrate.quad(lambda y: true_density_many(spec, [[x, y]])[0], centre - 6.0, centre + 6.0)
        assert value == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize('x', [-1.0, 0.3])
    def test_model_a_integrates_to_one(self, x):
        spec = ModelSpec('a', 1)
        centre = x / 2.0
        value, _ = integrate.dblquad(
            lambda y1, y2: true_density_many(spec, [[x, y1, y2]])[0],
            0.0, np.inf,
            lambda y2: centre - 12.0 * math.sqrt(y2), lambda y2: centre + 12.0 * math.sqrt(y2),
            epsabs=1e-9,
        )
        assert value == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize('model', ['b', 'c'])
    def test_random_anchors_integrate_to_one(self, model):
        spec = ModelSpec(model, 3)
        for x in np.random.default_rng(17).uniform(-1.0, 1.0, (5, 3)):
            centre = 3.0 * x[0] ** 3
            value, _ = integrate.quad(lambda y: true_density_many(spec, [[*x, y]])[0], centre - 6.0, centre + 6.0)
            assert value == pytest.approx(1.0, abs=1e-4)

    def test_model_a_random_anchors_integrate_to_one(self):
        spec = ModelSpec('a', 2)
        for x in np.random.default_rng(17).uniform(-1.5, 1.5, (5, 2)):
            centre = x.sum() / 3.0
            value, _ = integrate.dblquad(
                lambda y1, y2: true_density_many(spec, [[*x, y1, y2]])[0],
                0.0, np.inf,
                lambda y2: centre - 12.0 * math.sqrt(y2), lambda y2: centre + 12.0 * math.sqrt(y2),
                epsabs=1e-9,
            )
            assert value == pytest.approx(1.0, abs=1e-4)

    def test_conditional_slice_converges_to_true_density(self):
        spec = ModelSpec('b', 1, seed=5)
        statistics = []
        for n in (1000, 10000, 100000):
            sample = sample_model(spec, n)
            in_slice = np.abs(sample.x[:, 0]) < 0.2
            statistics.append(stats.kstest(sample.y[in_slice, 0], stats.norm(0.0, 0.5).cdf).statistic)
        assert statistics[0] > statistics[1] > statistics[2]
        assert statistics[2] < 0.05


class TestMarginalDensity:
    def test_model_c_is_uniform(self):
        np.testing.assert_allclose(marginal_density(ModelSpec('c', 2), [[0.1, -0.9], [0.0, 0.0]]), [0.25, 0.25])
        assert marginal_density(ModelSpec('c', 2), [[1.1, 0.0]])[0] == 0.0

    def test_model_b_is_standard_normal(self):
        x = np.array([[0.5, -1.0]])
        assert marginal_density(ModelSpec('b', 2), x)[0] == pytest.approx(
            stats.norm.pdf(0.5) * stats.norm.pdf(-1.0), rel=1e-12)

    def test_model_a_integrates_to_one(self):
        spec = ModelSpec('a', 1)
        value, _ = integrate.quad(lambda x: marginal_density(spec, [[x]])[0], -np.inf, np.inf)
        assert value == pytest.approx(1.0, abs=1e-6)

    def test_model_a_matches_sample_histogram(self):
        spec = ModelSpec('a', 1, seed=3)
        x = sample_model(spec, 20000).x[:, 0]
        inside = np.mean(np.abs(x) <= 1.0)
        expected, _ = integrate.quad(lambda u: marginal_density(spec, [[u]])[0], -1.0, 1.0)
        assert inside == pytest.approx(expected, abs=0.02)
