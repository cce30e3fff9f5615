"""
Infill criteria: EI, mEI (with gradient), EHI, and the Monte-Carlo batch
criteria q-mEI and mq-EI.

Every criterion measures improvement below a reference point r in the
minimization sense. The batch criteria use common random numbers: for a
fixed seed the standard normals are fixed and mapped through the factor of
the batch's joint posterior covariance, so the estimate is a smooth,
deterministic function of the batch.
"""

from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import norm

from src.constants import N_MC
from src.core.gp import MultiSurrogate, posterior_factor, spawn_seeds
from src.core.pareto import EmpiricalFront, nondominated_mask
from src.errors import DimensionError


class MCEstimate(NamedTuple):
    value: float
    std_error: float


def ei(mean, sd, threshold):
    """
    Expected improvement E[(threshold - Y)+] for Y ~ N(mean, sd^2).

    Broadcasts over its arguments; reduces to (threshold - mean)+ where sd = 0.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    threshold = np.asarray(threshold, dtype=float)
    gap = threshold - mean
    with np.errstate(divide='ignore', invalid='ignore'):
        u = np.where(sd > 0, gap / np.where(sd > 0, sd, 1.0), 0.0)
        value = np.where(sd > 0, gap * norm.cdf(u) + sd * norm.pdf(u), np.maximum(gap, 0.0))
    # -inf thresholds give zero improvement
    value = np.where(np.isneginf(threshold), 0.0, value)
    value = np.maximum(value, 0.0)
    return float(value) if value.ndim == 0 else value


def _check_reference(models: MultiSurrogate, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.size != models.m:
        raise DimensionError(f"Reference point has {r.size} values for {models.m} objectives")
    return r


def mei(models: MultiSurrogate, x, r):
    """Product over objectives of EI below r_j; vectorized over rows of x."""
    r = _check_reference(models, r)
    means, sds = models.predict(x)
    return np.prod(ei(means, sds, r), axis=-1)


def mei_gradient(models: MultiSurrogate, x, r) -> np.ndarray:
    """Gradient of mEI with respect to the design (product rule over the EI factors)."""
    r = _check_reference(models, r)
    x = np.asarray(x, dtype=float)
    values = np.empty(models.m)
    grads = np.empty((models.m, x.size))
    for j, model in enumerate(models.models):
        mean, sd, d_mean, d_sd = model.predict_with_gradient(x)
        values[j] = ei(mean, sd, r[j])
        if sd > 0:
            u = (r[j] - mean) / sd
            grads[j] = -norm.cdf(u) * d_mean + norm.pdf(u) * d_sd
        else:
            grads[j] = -d_mean if r[j] > mean else 0.0
    total = np.zeros(x.size)
    for j in range(models.m):
        others = np.prod(np.delete(values, j))
        total += others * grads[j]
    return total


def _improvement_cells(front_points: np.ndarray, r: np.ndarray):
    """Strip boundaries and heights describing the non-dominated part of the box below r."""
    inside = front_points[np.all(front_points < r, axis=1)] if front_points.size else np.zeros((0, 2))
    if inside.shape[0]:
        inside = inside[nondominated_mask(inside)]
        inside = inside[np.argsort(inside[:, 0], kind='stable')]
    edges = np.concatenate([[-np.inf], inside[:, 0], [r[0]]])
    heights = np.concatenate([[r[1]], inside[:, 1]])
    return edges, heights


def ehi(models: MultiSurrogate, x, r, front: Optional[EmpiricalFront] = None,
        n_mc: int = 100_000, seed: int = 0):
    """
    Expected hypervolume improvement of the front up to r.

    Bi-objective: exact, by splitting the non-dominated part of the box below
    r into vertical strips whose expectations factorize over the independent
    objectives. Otherwise a Monte-Carlo estimate.
    """
    r = _check_reference(models, r)
    points = front.points if front is not None else np.zeros((0, models.m))
    means, sds = models.predict(x)
    if models.m == 2:
        edges, heights = _improvement_cells(points, r)
        ei_edges = ei(np.expand_dims(means[..., 0], -1), np.expand_dims(sds[..., 0], -1), edges)
        widths = np.diff(ei_edges, axis=-1)
        ei_heights = ei(np.expand_dims(means[..., 1], -1), np.expand_dims(sds[..., 1], -1), heights)
        return np.maximum(np.sum(widths * ei_heights, axis=-1), 0.0)
    if np.ndim(x) > 1:
        return np.array([ehi_mc(models, row, r, front, n_mc, seed).value for row in np.asarray(x)])
    return ehi_mc(models, x, r, front, n_mc, seed).value


def ehi_mc(models: MultiSurrogate, x, r, front: Optional[EmpiricalFront] = None,
           n_mc: int = 100_000, seed: int = 0) -> MCEstimate:
    """
    Monte-Carlo EHI: joint draws of Y(x) and of a uniform point u in a box
    containing the improvement region; the hypervolume improvement is the box
    volume times P(Y(x) <= u <= r and u not dominated by the front).
    """
    r = _check_reference(models, r)
    mean, sd = models.predict(np.asarray(x, dtype=float))
    points = front.points if front is not None else np.zeros((0, models.m))
    lower = np.minimum(mean - 8.0 * sd, r)
    if points.size:
        lower = np.minimum(lower, points.min(axis=0))
    lower = np.minimum(lower, r - 1e-12)
    volume = float(np.prod(r - lower))
    rng = np.random.default_rng(seed)
    ys = mean + sd * rng.standard_normal((n_mc, models.m))
    us = lower + rng.random((n_mc, models.m)) * (r - lower)
    hit = np.all(ys <= us, axis=1)
    if points.size:
        for p in points:
            hit &= ~np.all(p <= us, axis=1)
    samples = volume * hit
    return MCEstimate(float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(n_mc)))


def _objective_seeds(seed, m):
    return spawn_seeds(seed, m)


def batch_improvements(models: MultiSurrogate, batch, r, n_mc: int = N_MC, seed=0) -> np.ndarray:
    """
    Per-objective improvements (r_j - Y_j)+ on joint posterior draws at the
    batch, shape (m, n_mc, q).
    """
    r = _check_reference(models, r)
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    improvements = np.empty((models.m, n_mc, batch.shape[0]))
    for j, (model, child) in enumerate(zip(models.models, _objective_seeds(seed, models.m))):
        factor = posterior_factor(model, batch)
        normals = np.random.default_rng(child).standard_normal((n_mc, factor.n_unique))
        improvements[j] = np.maximum(r[j] - factor.draw(normals), 0.0)
    return improvements


def qmei_estimate(models: MultiSurrogate, batch, r, n_mc: int = N_MC, seed=0) -> MCEstimate:
    """q-mEI: mean over draws of the best (over the batch) product of improvements."""
    improvements = batch_improvements(models, batch, r, n_mc, seed)
    per_draw = np.max(np.prod(improvements, axis=0), axis=1)
    se = float(per_draw.std(ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else 0.0
    return MCEstimate(float(per_draw.mean()), se)


def mqei_estimate(models: MultiSurrogate, batch, r, n_mc: int = N_MC, seed=0) -> MCEstimate:
    """mq-EI: product over objectives of the per-objective batch q-EI."""
    improvements = batch_improvements(models, batch, r, n_mc, seed)
    per_objective = np.max(improvements, axis=2)
    means = per_objective.mean(axis=1)
    value = float(np.prod(means))
    if n_mc < 2:
        return MCEstimate(value, 0.0)
    ses = per_objective.std(axis=1, ddof=1) / np.sqrt(n_mc)
    with np.errstate(divide='ignore', invalid='ignore'):
        rel = np.where(means > 0, ses / np.where(means > 0, means, 1.0), 0.0)
    return MCEstimate(value, float(abs(value) * np.sqrt(np.sum(rel ** 2))))


def qmei_mc(models: MultiSurrogate, batch, r, n_mc: int = N_MC, seed=0) -> float:
    return qmei_estimate(models, batch, r, n_mc, seed).value


def mqei_mc(models: MultiSurrogate, batch, r, n_mc: int = N_MC, seed=0) -> float:
    return mqei_estimate(models, batch, r, n_mc, seed).value


def normalized_sd(models: MultiSurrogate, x):
    """Sum over objectives of posterior sd divided by the prior sd."""
    _, sds = models.predict(x)
    prior = np.array([np.sqrt(model.params.signal_variance) for model in models.models])
    return np.sum(sds / prior, axis=-1)
