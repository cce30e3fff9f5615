import numpy as np
import pytest

from src.core.gp import GPConfig, KernelParams, MultiSurrogate, fit_multi, with_params
from src.core.pareto import BoxDomain
from src.core.problems import quadratic_pair


def build_models(xs, ys, lengthscale=0.3, variance=1.0, nugget=0.0, means=None):
    """Independent GPs with fixed hyperparameters, one per column of ys."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    means = ys.mean(axis=0) if means is None else np.asarray(means, dtype=float)
    models = []
    for j in range(ys.shape[1]):
        params = KernelParams(np.full(xs.shape[1], lengthscale), variance, nugget, float(means[j]))
        models.append(with_params(xs, ys[:, j], params))
    return MultiSurrogate(models=tuple(models))


@pytest.fixture
def quadratic():
    return quadratic_pair()


@pytest.fixture
def quadratic_models(quadratic):
    """GPs on the quadratic pair observed at 0, 0.35 and 1, interpolating exactly."""
    xs = np.array([[0.0], [0.35], [1.0]])
    return build_models(xs, quadratic.evaluate(xs), lengthscale=0.4, variance=0.1), xs


@pytest.fixture
def fast_spec():
    """Spec dictionary with small Monte-Carlo and optimizer sizes."""
    def make(**overrides):
        spec = {
            'problem': 'quadratic',
            'criterion': 'mEI',
            'budget': 8,
            'initial_doe_size': 3,
            'seed': 7,
            'n_mc': 400,
            'n_sims': 40,
            'n_sim_points': 100,
            'n_quad': 50,
            'gp': {'n_starts': 3},
            'optimizer': {'n_raw': 200, 'n_starts': 3, 'local_budget': 60},
            'restricted_w': [0.1, 0.3],
            'oracle_resolution': 500,
        }
        spec.update(overrides)
        return spec
    return make


@pytest.fixture
def fitted_quadratic_models(quadratic):
    """Maximum-likelihood GPs on the quadratic pair observed at 0.1, 0.3 and 0.8."""
    xs = np.array([[0.1], [0.3], [0.8]])
    return fit_multi(xs, quadratic.evaluate(xs), GPConfig(seed=0), BoxDomain.unit(1)), xs
