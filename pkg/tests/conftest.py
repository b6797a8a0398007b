"""
Shared fixtures for the cdrodeo test suite
"""

import numpy as np
import pytest

from cdrodeo.estimator import MarginalValues, Sample
from cdrodeo.kernels import KERNELS, compute_norms
from cdrodeo.models import ModelSpec, marginal_density, sample_model


@pytest.fixture
def gaussian():
    return KERNELS['gaussian']


@pytest.fixture
def biweight():
    return KERNELS['biweight']


@pytest.fixture
def gaussian_norms(gaussian):
    return compute_norms(gaussian)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def normal_density_sample(rng):
    """Density-mode sample (d1 = 0) of 100 standard normal draws"""
    return Sample(rng.standard_normal((100, 1)), d1=0)


@pytest.fixture
def model_b_spec():
    return ModelSpec('b', d1=3, seed=7)


@pytest.fixture
def model_b_sample(model_b_spec):
    return sample_model(model_b_spec, 3000)


@pytest.fixture
def model_b_marginal(model_b_spec, model_b_sample):
    return MarginalValues(marginal_density(model_b_spec, model_b_sample.x))


@pytest.fixture
def isolated_logs(tmp_path, monkeypatch):
    """Run inside tmp_path with logs written under it"""
    import config

    monkeypatch.chdir(tmp_path)
    monkeypatch.setattr(config, 'LOG_DIR', str(tmp_path / 'logs'))
    return tmp_path
