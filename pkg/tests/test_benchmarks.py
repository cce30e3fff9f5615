"""
Reproduction studies on the analytical benchmarks.

These run full targeting loops over ten seeds and take minutes; they are
deselected by default and run with `pytest -m slow`.
"""

import numpy as np
import pandas as pd
import pytest

from src.core.criteria import mei, mei_gradient, mqei_mc, qmei_mc
from src.core.metrics import time_to_target
from src.core.pareto import BoxDomain
from src.core.problems import quadratic_domination_interval
from src.core.search import OptimizerConfig, maximize, maximize_batch
from src.managers.experiment_manager import ExperimentManager
from src.managers.experiment_settings import ExperimentSettings
from src.managers.targeting_manager import TargetingManager

pytestmark = pytest.mark.slow

N_SEEDS = 10
R = np.array([0.15, 0.42])
UNIT = BoxDomain.unit(1)


def study(data, n_seeds=N_SEEDS):
    """Time to target of every seed for one configuration."""
    times = []
    for seed in range(n_seeds):
        config = ExperimentSettings(data=dict(data, seed=seed, stop_on_convergence=False)).load().run
        history = TargetingManager(config).run()
        times.append(time_to_target(history, config.reference))
    return times


def summarize(times):
    successes = [t for t in times if t is not None]
    return len(successes), float(np.mean(successes)) if successes else float('inf')


class TestQuadraticBatches:
    """mEI and both batch criteria on three-point quadratic setups."""

    def test_mei_maximizer_matches_grid(self, quadratic_models):
        models, _ = quadratic_models
        x, value = maximize(lambda x: mei(models, x, R), UNIT, OptimizerConfig.for_dimension(1, seed=0),
                            gradient=lambda x: mei_gradient(models, x, R), vectorized=True)
        grid = np.linspace(0.0, 1.0, 10_000)[:, None]
        values = mei(models, grid, R)
        assert value >= values.max() - 1e-9
        assert x[0] == pytest.approx(grid[np.argmax(values), 0], abs=1e-3)

    def test_fitted_mei_maximizer_near_domination_interval(self, fitted_quadratic_models):
        models, _ = fitted_quadratic_models
        x, _ = maximize(lambda x: mei(models, x, R), UNIT, OptimizerConfig.for_dimension(1, seed=0),
                        gradient=lambda x: mei_gradient(models, x, R), vectorized=True)
        lo, hi = quadratic_domination_interval(R)
        assert lo - 0.03 <= x[0] <= hi + 0.03

    def test_qmei_batch_lands_in_target_region(self, quadratic, fitted_quadratic_models):
        models, _ = fitted_quadratic_models
        batch, _ = maximize_batch(lambda b: qmei_mc(models, b, R, 20_000, seed=3), UNIT, 2,
                                  OptimizerConfig.for_batch(2, 1, seed=4))
        lo, hi = quadratic_domination_interval(R)
        assert np.all((batch[:, 0] >= lo - 0.03) & (batch[:, 0] <= hi + 0.03))
        assert np.any(np.all(quadratic.evaluate(batch) <= R, axis=1))

    def test_mqei_batch_splits_objectives(self, quadratic, fitted_quadratic_models):
        """The mq-EI batch improves one objective per point, neither image dominating R."""
        models, _ = fitted_quadratic_models
        batch, _ = maximize_batch(lambda b: mqei_mc(models, b, R, 20_000, seed=3), UNIT, 2,
                                  OptimizerConfig.for_batch(2, 1, seed=4))
        values = quadratic.evaluate(batch)
        assert not np.any(np.all(values <= R, axis=1))
        improves_first = values[:, 0] < R[0]
        improves_second = values[:, 1] < R[1]
        assert improves_first.sum() == 1 and improves_second.sum() == 1
        assert not np.any(improves_first & improves_second)


def test_quadratic_run_reaches_interval():
    config = ExperimentSettings(data={'seed': 0, 'stop_on_convergence': False}).load().run
    history = TargetingManager(config).run()
    lo, hi = quadratic_domination_interval(R)
    assert np.any((history.X[3:, 0] >= lo) & (history.X[3:, 0] <= hi))


class TestZDT3Study:
    BASE = {'problem': 'zdt3', 'problem_options': {'d': 4}, 'initial_doe_size': 20, 'budget': 40}

    def test_mei(self):
        successes, mean = summarize(study(self.BASE))
        assert successes >= 8
        assert mean <= 10

    def test_two_point_batches(self):
        times = study(dict(self.BASE, criterion='q-mEI', q=2))
        successes = sum(t is not None and t <= 14 for t in times)
        assert successes >= 7
        assert summarize(times)[1] <= 12

    def test_ehi_reaches_target_less_often(self):
        mei_successes, _ = summarize(study(self.BASE))
        ehi_successes, _ = summarize(study(dict(self.BASE, criterion='EHI')))
        assert ehi_successes < mei_successes


def test_p1_study():
    successes, mean = summarize(study({'problem': 'p1', 'initial_doe_size': 8, 'budget': 20}))
    assert successes >= 8
    assert mean <= 10


def test_replicated_table(tmp_path):
    """The replicate back-end tabulates the ZDT3 comparison with the NSGA-II baseline."""
    data = {'problem': 'zdt3', 'initial_doe_size': 20, 'budget': 40, 'n_replications': N_SEEDS,
            'stop_on_convergence': False, 'table_id': 'zdt3-targeting',
            'variants': [{'label': 'NSGA-II', 'algorithm': 'nsga2',
                          'nsga2': {'pop': 20, 'generations': 20, 'report_generations': [1, 10]}}]}
    settings = ExperimentSettings(data=data)
    summary = ExperimentManager(settings.load(), str(tmp_path), settings=settings).replicate()
    labels = summary['label'].tolist()
    assert labels == ['mEI', 'NSGA-II', 'NSGA-II_1', 'NSGA-II_10']
    per_seed = pd.read_csv(tmp_path / 'per_seed.csv')
    assert len(per_seed) == 4 * N_SEEDS
