"""
NSGA-II baseline: fast non-dominated sorting, crowding distance, binary
tournament selection, SBX crossover and polynomial mutation.
"""

from typing import Optional

import numpy as np

from src.constants import PM_ETA, SBX_ETA, SBX_PROB
from src.core.history import STATUS_BUDGET, RunHistory
from src.core.problems import Problem
from src.errors import ConfigError


def non_dominated_ranks(values: np.ndarray) -> np.ndarray:
    """Pareto rank of every row, 1 for the non-dominated layer."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n = values.shape[0]
    leq = np.all(values[:, None, :] <= values[None, :, :], axis=2)
    lt = np.any(values[:, None, :] < values[None, :, :], axis=2)
    dominates = leq & lt  # dominates[i, k]: i dominates k
    counts = dominates.sum(axis=0)
    ranks = np.zeros(n, dtype=int)
    current = np.flatnonzero(counts == 0)
    rank = 1
    while current.size:
        ranks[current] = rank
        counts = counts - dominates[current].sum(axis=0)
        counts[ranks > 0] = -1
        current = np.flatnonzero(counts == 0)
        rank += 1
    return ranks


def crowding_distance(values: np.ndarray) -> np.ndarray:
    """Crowding distance inside one layer; boundary individuals get +inf."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n, m = values.shape
    distance = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for j in range(m):
        order = np.argsort(values[:, j], kind='stable')
        span = values[order[-1], j] - values[order[0], j]
        distance[order[0]] = distance[order[-1]] = np.inf
        if span > 0:
            distance[order[1:-1]] += (values[order[2:], j] - values[order[:-2], j]) / span
    return distance


def _rank_and_crowd(values: np.ndarray):
    ranks = non_dominated_ranks(values)
    crowd = np.zeros(values.shape[0])
    for rank in np.unique(ranks):
        layer = np.flatnonzero(ranks == rank)
        crowd[layer] = crowding_distance(values[layer])
    return ranks, crowd


def _tournament(rng, ranks, crowd, n):
    a = rng.integers(0, ranks.size, n)
    b = rng.integers(0, ranks.size, n)
    better_a = (ranks[a] < ranks[b]) | ((ranks[a] == ranks[b]) & (crowd[a] > crowd[b]))
    tie = (ranks[a] == ranks[b]) & (crowd[a] == crowd[b])
    coin = rng.random(n) < 0.5
    return np.where(better_a | (tie & coin), a, b)


def sbx(rng, p1, p2, lower, upper, eta: float = SBX_ETA, prob: float = SBX_PROB):
    """Simulated binary crossover, bounded variant."""
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() > prob:
        return c1, c2
    for k in range(p1.size):
        if rng.random() > 0.5 or abs(p1[k] - p2[k]) < 1e-14:
            continue
        y1, y2 = min(p1[k], p2[k]), max(p1[k], p2[k])
        lo, hi = lower[k], upper[k]
        u = rng.random()
        children = []
        for beta in (1.0 + 2.0 * (y1 - lo) / (y2 - y1), 1.0 + 2.0 * (hi - y2) / (y2 - y1)):
            alpha = 2.0 - beta ** -(eta + 1.0)
            if u <= 1.0 / alpha:
                betaq = (u * alpha) ** (1.0 / (eta + 1.0))
            else:
                betaq = (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))
            children.append(betaq)
        child1 = np.clip(0.5 * ((y1 + y2) - children[0] * (y2 - y1)), lo, hi)
        child2 = np.clip(0.5 * ((y1 + y2) + children[1] * (y2 - y1)), lo, hi)
        if rng.random() < 0.5:
            child1, child2 = child2, child1
        c1[k], c2[k] = child1, child2
    return c1, c2


def polynomial_mutation(rng, x, lower, upper, eta: float = PM_ETA, prob: Optional[float] = None):
    prob = 1.0 / x.size if prob is None else prob
    y = x.copy()
    for k in range(x.size):
        if rng.random() >= prob:
            continue
        lo, hi = lower[k], upper[k]
        width = hi - lo
        d1, d2 = (y[k] - lo) / width, (hi - y[k]) / width
        u = rng.random()
        power = 1.0 / (eta + 1.0)
        if u < 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            delta = val ** power - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            delta = 1.0 - val ** power
        y[k] = np.clip(y[k] + delta * width, lo, hi)
    return y


def _survivors(values: np.ndarray, pop: int) -> np.ndarray:
    ranks, crowd = _rank_and_crowd(values)
    order = np.lexsort((-crowd, ranks))
    return order[:pop]


def nsga2(problem: Problem, pop: int, generations: int, seed=0, logger=None) -> RunHistory:
    """
    Run NSGA-II and record every evaluation; evaluations of generation g carry iter = g.

    The initial population is generation 0 and counts as the history's initial design.
    """
    if pop < 4 or pop % 2:
        raise ConfigError(f"NSGA-II population must be even and at least 4, got {pop}")
    if generations < 0:
        raise ConfigError("NSGA-II generations must be nonnegative")
    rng = np.random.default_rng(seed)
    lower, upper = problem.domain.lower, problem.domain.upper
    history = RunHistory(d=problem.d, m=problem.m, q=pop, n_initial=pop, budget=pop * (generations + 1),
                         label='nsga2')

    population = problem.domain.scale(rng.random((pop, problem.d)))
    values = problem.evaluate(population)
    for x, y in zip(population, values):
        history.add_evaluation(x, y, 0)

    for generation in range(1, generations + 1):
        ranks, crowd = _rank_and_crowd(values)
        parents = _tournament(rng, ranks, crowd, pop)
        offspring = np.empty_like(population)
        for k in range(0, pop, 2):
            c1, c2 = sbx(rng, population[parents[k]], population[parents[k + 1]], lower, upper)
            offspring[k] = polynomial_mutation(rng, c1, lower, upper)
            offspring[k + 1] = polynomial_mutation(rng, c2, lower, upper)
        offspring_values = problem.evaluate(offspring)
        for x, y in zip(offspring, offspring_values):
            history.add_evaluation(x, y, generation)
        merged = np.vstack([population, offspring])
        merged_values = np.vstack([values, offspring_values])
        keep = _survivors(merged_values, pop)
        population, values = merged[keep], merged_values[keep]
        if logger:
            logger.append(f"NSGA-II generation {generation}: {int(np.sum(non_dominated_ranks(values) == 1))} "
                          f"non-dominated individuals")

    history.status = STATUS_BUDGET
    return history
