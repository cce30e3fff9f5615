import numpy as np
import pytest

from src.core.nsga2 import crowding_distance, non_dominated_ranks, nsga2, polynomial_mutation, sbx
from src.core.pareto import hypervolume
from src.core.problems import zdt3
from src.errors import ConfigError


def test_ranks_example():
    ranks = non_dominated_ranks(np.array([[0, 1], [1, 0], [1, 1], [2, 2]]))
    assert ranks.tolist() == [1, 1, 2, 3]


def test_ranks_match_brute_force():
    rng = np.random.default_rng(0)
    values = rng.random((30, 2))
    ranks = non_dominated_ranks(values)
    remaining = list(range(30))
    level = 1
    while remaining:
        layer = [i for i in remaining
                 if not any(np.all(values[k] <= values[i]) and np.any(values[k] < values[i]) for k in remaining)]
        assert all(ranks[i] == level for i in layer)
        remaining = [i for i in remaining if i not in layer]
        level += 1


def test_crowding_boundaries_are_infinite():
    values = np.array([[0.0, 1.0], [0.3, 0.6], [0.6, 0.3], [1.0, 0.0]])
    distance = crowding_distance(values)
    assert np.isinf(distance[0]) and np.isinf(distance[3])
    assert np.all(np.isfinite(distance[1:3]))


def test_operators_stay_in_bounds():
    rng = np.random.default_rng(1)
    lower, upper = np.zeros(4), np.ones(4)
    for _ in range(200):
        a, b = rng.random(4), rng.random(4)
        c1, c2 = sbx(rng, a, b, lower, upper)
        for child in (c1, c2, polynomial_mutation(rng, c1, lower, upper, prob=1.0)):
            assert np.all(child >= lower) and np.all(child <= upper)


def test_history_size_and_generations():
    history = nsga2(zdt3(4), pop=8, generations=3, seed=0)
    assert history.n_evaluations == 8 * 4
    assert history.n_initial == 8
    assert sorted(set(e.iteration for e in history.evaluations)) == [0, 1, 2, 3]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_front_improves_over_generations(seed):
    pop = 20
    history = nsga2(zdt3(4), pop=pop, generations=20, seed=seed)
    ref = np.array([1.0, 10.0])
    first = hypervolume(history.truncated(2 * pop).front(), ref)
    final = hypervolume(history.front(), ref)
    assert final > first


def test_population_must_be_even():
    with pytest.raises(ConfigError):
        nsga2(zdt3(4), pop=7, generations=1)
