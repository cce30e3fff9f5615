"""
Designs of experiments and inner maximization of infill criteria.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from src.constants import BATCH_N_STARTS, BATCH_RAW_PER_DIM, LOCAL_BUDGET, N_STARTS, RAW_PER_DIM
from src.core.pareto import BoxDomain


@dataclass
class OptimizerConfig:
    n_starts: int = N_STARTS
    n_raw: int = RAW_PER_DIM
    local_budget: int = LOCAL_BUDGET
    seed: int = 0

    @classmethod
    def for_dimension(cls, d: int, seed: int = 0, **overrides) -> "OptimizerConfig":
        config = cls(n_starts=N_STARTS, n_raw=RAW_PER_DIM * d, local_budget=LOCAL_BUDGET, seed=seed)
        return config.updated(**overrides)

    @classmethod
    def for_batch(cls, q: int, d: int, seed: int = 0, **overrides) -> "OptimizerConfig":
        config = cls(n_starts=BATCH_N_STARTS, n_raw=BATCH_RAW_PER_DIM * q * d, local_budget=LOCAL_BUDGET, seed=seed)
        return config.updated(**overrides)

    def updated(self, **overrides) -> "OptimizerConfig":
        for key, value in overrides.items():
            if value is not None and hasattr(self, key):
                setattr(self, key, value)
        if min(self.n_starts, self.n_raw, self.local_budget) < 1:
            raise ValueError("Optimizer counts must be positive")
        return self


def lhs(n: int, domain: BoxDomain, seed) -> np.ndarray:
    """Latin hypercube: one point per equal-width stratum on every coordinate."""
    sampler = qmc.LatinHypercube(d=domain.dim, seed=np.random.default_rng(seed))
    return domain.scale(sampler.random(n))


def _select_starts(candidates: np.ndarray, values: np.ndarray, n_starts: int) -> np.ndarray:
    """Indices of the best candidates; equal values ordered by lexicographic design."""
    keys = [candidates[:, k] for k in reversed(range(candidates.shape[1]))]
    order = np.lexsort(keys + [-values])
    return order[:n_starts]


def _better(value: float, x: np.ndarray, best_value: float, best_x: Optional[np.ndarray]) -> bool:
    if best_x is None or value > best_value:
        return True
    if value == best_value:
        return tuple(x) < tuple(best_x)
    return False


def multistart(criterion: Callable[[np.ndarray], float], domain: BoxDomain, config: OptimizerConfig,
               gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
               vectorized: bool = False) -> List[Tuple[np.ndarray, float]]:
    """
    Screen n_raw space-filling candidates, refine the n_starts best ones.

    Returns:
        Refined (design, value) pairs sorted from best to worst
    """
    candidates = lhs(config.n_raw, domain, config.seed)
    if vectorized:
        values = np.asarray(criterion(candidates), dtype=float).reshape(-1)
    else:
        values = np.array([float(criterion(c)) for c in candidates])
    values = np.where(np.isfinite(values), values, -np.inf)
    bounds = list(zip(domain.lower, domain.upper))

    def negative(x):
        return -float(criterion(domain.clip(x)))

    results = []
    for idx in _select_starts(candidates, values, config.n_starts):
        start = candidates[idx]
        if gradient is not None:
            res = minimize(negative, start, jac=lambda x: -np.asarray(gradient(domain.clip(x)), dtype=float),
                           method='L-BFGS-B', bounds=bounds, options={'maxfun': config.local_budget})
        else:
            res = minimize(negative, start, method='Nelder-Mead', bounds=bounds,
                           options={'maxfev': config.local_budget, 'xatol': 1e-8, 'fatol': 1e-14})
        x = domain.clip(res.x)
        value = float(criterion(x))
        if not np.isfinite(value) or value < values[idx]:
            x, value = start, float(values[idx])
        results.append((x, value))
    results.sort(key=lambda item: (-item[1], tuple(item[0])))
    return results


def maximize(criterion: Callable[[np.ndarray], float], domain: BoxDomain, config: Optional[OptimizerConfig] = None,
             gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
             vectorized: bool = False) -> Tuple[np.ndarray, float]:
    """
    Maximize a criterion over the box: space-filling screening, then gradient
    ascent (L-BFGS-B) when a gradient is given, bounded Nelder-Mead otherwise.

    Ties go to the lexicographically smallest design.
    """
    config = config or OptimizerConfig.for_dimension(domain.dim)
    best_x, best_value = None, -np.inf
    for x, value in multistart(criterion, domain, config, gradient, vectorized):
        if _better(value, x, best_value, best_x):
            best_x, best_value = x, value
    return best_x, best_value


def maximize_batch(criterion: Callable[[np.ndarray], float], domain: BoxDomain, q: int,
                   config: Optional[OptimizerConfig] = None,
                   fixed: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    """
    Derivative-free multistart search over batches of q designs.

    The criterion receives a (q, d) array and must be deterministic during the
    search (fixed Monte-Carlo seed). Rows of `fixed` stay in the batch and only
    the remaining q - len(fixed) designs are optimized.
    """
    if q < 1:
        raise ValueError("Batch size must be at least 1")
    d = domain.dim
    fixed = np.zeros((0, d)) if fixed is None else np.atleast_2d(np.asarray(fixed, dtype=float))
    free = q - fixed.shape[0]
    if free < 1:
        return fixed[:q], float(criterion(fixed[:q]))
    config = config or OptimizerConfig.for_batch(q, d)
    product = BoxDomain(np.tile(domain.lower, free), np.tile(domain.upper, free))

    def assemble(flat):
        return np.vstack([fixed, product.clip(flat).reshape(free, d)])

    best_flat, best_value = None, -np.inf
    for flat, value in multistart(lambda z: criterion(assemble(z)), product, config):
        if _better(value, flat, best_value, best_flat):
            best_flat, best_value = flat, value
    return assemble(best_flat), best_value
