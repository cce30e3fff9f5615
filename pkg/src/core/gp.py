"""
Independent Gaussian-process surrogates, one per objective.

Kernel: anisotropic Matern-5/2 with a constant mean. Hyperparameters are
fitted by maximum likelihood; the constant mean (generalized least squares)
and the signal variance are profiled out in closed form, so the multistart
search runs over log-lengthscales only.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import minimize

from src.constants import (
    GP_INITIAL_NUGGET,
    GP_LENGTHSCALE_BOUNDS,
    GP_MAX_NUGGET,
    GP_MIN_SIGNAL_VARIANCE,
    GP_N_STARTS,
    GP_SIM_INITIAL_JITTER,
)
from src.core.pareto import BoxDomain
from src.errors import ConditioningError, DataError, DimensionError

SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True)
class KernelParams:
    lengthscales: np.ndarray
    signal_variance: float
    nugget: float
    constant_mean: float

    def __post_init__(self):
        object.__setattr__(self, 'lengthscales', np.atleast_1d(np.asarray(self.lengthscales, dtype=float)))
        if np.any(self.lengthscales <= 0) or self.signal_variance <= 0 or self.nugget < 0:
            raise DataError("Kernel parameters must be positive (nugget non-negative)")


@dataclass
class GPConfig:
    n_starts: int = GP_N_STARTS
    initial_nugget: float = GP_INITIAL_NUGGET
    max_nugget: float = GP_MAX_NUGGET
    lengthscale_bounds: Tuple[float, float] = GP_LENGTHSCALE_BOUNDS
    local_maxiter: int = 100
    seed: int = 0


def matern52(x1: np.ndarray, x2: np.ndarray, lengthscales: np.ndarray, variance: float = 1.0) -> np.ndarray:
    """Matern-5/2 covariance matrix between the rows of x1 and x2."""
    diff = (x1[:, None, :] - x2[None, :, :]) / lengthscales
    r = np.sqrt(np.sum(diff ** 2, axis=2))
    return variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r ** 2) * np.exp(-SQRT5 * r)


def matern52_gradient(x: np.ndarray, xs: np.ndarray, lengthscales: np.ndarray, variance: float) -> np.ndarray:
    """Derivative of k(x, xs_i) with respect to x, shape (n, d)."""
    delta = x[None, :] - xs
    r = np.sqrt(np.sum((delta / lengthscales) ** 2, axis=1))
    factor = -5.0 / 3.0 * variance * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
    return factor[:, None] * delta / lengthscales ** 2


def _nugget_ladder(initial: float, maximum: float) -> List[float]:
    ladder = [initial] if initial > 0 else [0.0, GP_INITIAL_NUGGET]
    while ladder[-1] * 10 <= maximum * (1 + 1e-9):
        ladder.append(ladder[-1] * 10)
    return ladder


def _robust_cholesky(matrix: np.ndarray, ladder: Sequence[float], scale: float = 1.0) -> Tuple[np.ndarray, float]:
    """Lower Cholesky factor of matrix + jitter*scale*I, escalating the jitter on failure."""
    eye = np.eye(matrix.shape[0])
    for jitter in ladder:
        try:
            return linalg.cholesky(matrix + jitter * scale * eye, lower=True), jitter
        except linalg.LinAlgError:
            continue
    raise ConditioningError(
        f"Matrix of size {matrix.shape[0]} not positive definite with jitter up to {ladder[-1]:g}",
        details=ladder[-1],
    )


class _Profile(NamedTuple):
    loglik: float
    grad: np.ndarray
    mean: float
    variance: float
    nugget: float


def _profile_likelihood(log_ls: np.ndarray, xs: np.ndarray, ys: np.ndarray, ladder, with_grad=True) -> _Profile:
    """Concentrated log-likelihood and its gradient w.r.t. log-lengthscales."""
    n = ys.size
    ls = np.exp(log_ls)
    corr = matern52(xs, xs, ls)
    chol, tau = _robust_cholesky(corr, ladder)
    ones = np.ones(n)
    r_inv_y = linalg.cho_solve((chol, True), ys)
    r_inv_1 = linalg.cho_solve((chol, True), ones)
    mean = float(ones @ r_inv_y / (ones @ r_inv_1))
    resid = ys - mean
    beta = linalg.cho_solve((chol, True), resid)
    variance = max(float(resid @ beta) / n, GP_MIN_SIGNAL_VARIANCE)
    loglik = -0.5 * n * (np.log(2 * np.pi * variance) + 1.0) - float(np.sum(np.log(np.diag(chol))))
    grad = np.zeros_like(log_ls)
    if with_grad:
        r_inv = linalg.cho_solve((chol, True), np.eye(n))
        diff = (xs[:, None, :] - xs[None, :, :]) / ls
        r = np.sqrt(np.sum(diff ** 2, axis=2))
        base = 5.0 / 3.0 * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
        outer = np.outer(beta, beta) / variance
        for k in range(log_ls.size):
            d_corr = base * diff[:, :, k] ** 2
            grad[k] = 0.5 * (np.sum(outer * d_corr) - np.sum(r_inv * d_corr))
    return _Profile(loglik, grad, mean, variance, tau)


@dataclass(frozen=True)
class SurrogateModel:
    inputs: np.ndarray
    outputs: np.ndarray
    params: KernelParams
    chol: np.ndarray
    alpha: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.outputs.size

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def cross_covariance(self, points: np.ndarray) -> np.ndarray:
        return matern52(self.inputs, points, self.params.lengthscales, self.params.signal_variance)

    def predict(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at one point (d,) or many (k, d)."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if pts.shape[1] != self.dim:
            raise DimensionError(f"Model expects {self.dim}-dimensional designs, got {pts.shape[1]}")
        k_star = self.cross_covariance(pts)
        mean = self.params.constant_mean + k_star.T @ self.alpha
        v = linalg.solve_triangular(self.chol, k_star, lower=True)
        var = np.maximum(self.params.signal_variance - np.sum(v ** 2, axis=0), 0.0)
        sd = np.sqrt(var)
        if np.ndim(x) == 1:
            return mean[0], sd[0]
        return mean, sd

    def predict_with_gradient(self, x: np.ndarray) -> Tuple[float, float, np.ndarray, np.ndarray]:
        """Mean, sd and their gradients with respect to the design."""
        x = np.asarray(x, dtype=float)
        k_star = self.cross_covariance(x[None, :])[:, 0]
        dk = matern52_gradient(x, self.inputs, self.params.lengthscales, self.params.signal_variance)
        mean = self.params.constant_mean + k_star @ self.alpha
        w = linalg.cho_solve((self.chol, True), k_star)
        var = max(self.params.signal_variance - k_star @ w, 0.0)
        sd = np.sqrt(var)
        d_mean = dk.T @ self.alpha
        d_var = -2.0 * dk.T @ w
        d_sd = d_var / (2.0 * sd) if sd > 0 else np.zeros_like(d_var)
        return float(mean), float(sd), d_mean, d_sd

    def posterior(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Joint posterior mean vector and covariance matrix at the given points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k_star = self.cross_covariance(pts)
        mean = self.params.constant_mean + k_star.T @ self.alpha
        v = linalg.solve_triangular(self.chol, k_star, lower=True)
        prior = matern52(pts, pts, self.params.lengthscales, self.params.signal_variance)
        cov = prior - v.T @ v
        return mean, 0.5 * (cov + cov.T)


class PosteriorFactor(NamedTuple):
    """Factorized joint posterior at canonically ordered unique points."""
    mean: np.ndarray
    chol: np.ndarray
    inverse: np.ndarray

    def draw(self, normals: np.ndarray) -> np.ndarray:
        """Map standard normals (n_sims, n_unique) to posterior samples at the original points."""
        samples = self.mean[None, :] + normals @ self.chol.T
        return samples[:, self.inverse]

    @property
    def n_unique(self) -> int:
        return self.mean.size


def posterior_factor(model: SurrogateModel, points: np.ndarray, max_jitter: float = GP_MAX_NUGGET) -> PosteriorFactor:
    """
    Factor the joint posterior covariance at `points`.

    Repeated points are merged and the unique points are sorted
    lexicographically, so the same standard normals give the same draws
    whatever the order of the requested points.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    unique, inverse = np.unique(pts, axis=0, return_inverse=True)
    mean, cov = model.posterior(unique)
    ladder = _nugget_ladder(GP_SIM_INITIAL_JITTER, max_jitter)
    chol, _ = _robust_cholesky(cov, ladder, scale=model.params.signal_variance)
    return PosteriorFactor(mean=mean, chol=chol, inverse=np.asarray(inverse).reshape(-1))


def _deduplicate(xs: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    _, first, inverse = np.unique(xs, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    scale = max(1.0, float(np.max(np.abs(ys))))
    for group in range(first.size):
        values = ys[inverse == group]
        if np.ptp(values) > 1e-12 * scale:
            raise DataError("Duplicate inputs with conflicting outputs", details=xs[first[group]])
    keep = np.sort(first)
    return xs[keep], ys[keep]


def fit(xs, ys, config: Optional[GPConfig] = None, domain: Optional[BoxDomain] = None) -> SurrogateModel:
    """
    Fit a Matern-5/2 GP by maximum likelihood.

    Args:
        xs: (n, d) designs
        ys: (n,) observed values of one objective
        config: fitting options (multistart size, jitter ladder, seed)
        domain: box used to scale the lengthscale search range

    Returns:
        SurrogateModel with the factorized kernel matrix

    Raises:
        DataError: fewer than two distinct inputs or conflicting duplicates
        ConditioningError: kernel matrix not factorizable after nugget escalation
    """
    config = config or GPConfig()
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if xs.shape[0] != ys.size:
        raise DimensionError("Inputs and outputs must have the same length")
    if not np.all(np.isfinite(ys)):
        raise DataError("Outputs must be finite")
    xs, ys = _deduplicate(xs, ys)
    if ys.size < 2:
        raise DataError("At least two distinct inputs are needed to fit a GP")

    d = xs.shape[1]
    width = domain.width if domain is not None else np.maximum(np.ptp(xs, axis=0), 1e-3)
    lo = np.log(config.lengthscale_bounds[0] * width)
    hi = np.log(config.lengthscale_bounds[1] * width)
    ladder = _nugget_ladder(config.initial_nugget, config.max_nugget)

    def objective(log_ls):
        try:
            prof = _profile_likelihood(log_ls, xs, ys, ladder)
        except ConditioningError:
            return 1e25, np.zeros_like(log_ls)
        return -prof.loglik, -prof.grad

    rng = np.random.default_rng(config.seed)
    n_starts = max(1, config.n_starts)
    strata = (np.argsort(rng.random((d, n_starts)), axis=1).T + rng.random((n_starts, d))) / n_starts
    starts = lo + strata * (hi - lo)

    best_x, best_val = None, np.inf
    for start in starts:
        result = minimize(objective, start, jac=True, method='L-BFGS-B',
                          bounds=list(zip(lo, hi)), options={'maxiter': config.local_maxiter})
        value = float(result.fun)
        if np.isfinite(value) and (value < best_val - 1e-12 or best_x is None):
            best_x, best_val = np.clip(result.x, lo, hi), value
    if best_x is None or best_val >= 1e25:
        raise ConditioningError("No lengthscale gave a factorizable kernel matrix")

    return _assemble(xs, ys, np.exp(best_x), ladder)


def _assemble(xs: np.ndarray, ys: np.ndarray, lengthscales: np.ndarray, ladder) -> SurrogateModel:
    prof = _profile_likelihood(np.log(lengthscales), xs, ys, ladder, with_grad=False)
    variance = prof.variance
    nugget = prof.nugget * variance
    kernel = matern52(xs, xs, lengthscales, variance) + nugget * np.eye(ys.size)
    chol = linalg.cholesky(kernel, lower=True)
    alpha = linalg.cho_solve((chol, True), ys - prof.mean)
    params = KernelParams(lengthscales=lengthscales, signal_variance=variance,
                          nugget=nugget, constant_mean=prof.mean)
    return SurrogateModel(inputs=xs, outputs=ys, params=params, chol=chol, alpha=alpha)


def with_params(xs, ys, params: KernelParams) -> SurrogateModel:
    """Condition a GP with fixed hyperparameters on data (no likelihood search)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.asarray(ys, dtype=float).reshape(-1)
    kernel = matern52(xs, xs, params.lengthscales, params.signal_variance) + params.nugget * np.eye(ys.size)
    try:
        chol = linalg.cholesky(kernel, lower=True)
    except linalg.LinAlgError as e:
        raise ConditioningError(f"Kernel matrix not positive definite: {e}")
    alpha = linalg.cho_solve((chol, True), ys - params.constant_mean)
    return SurrogateModel(inputs=xs, outputs=ys, params=params, chol=chol, alpha=alpha)


def predict(model: SurrogateModel, x) -> Tuple[float, float]:
    return model.predict(x)


def spawn_seeds(seed, n: int) -> List[np.random.SeedSequence]:
    """Independent child streams of an int seed or of an existing SeedSequence."""
    parent = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return parent.spawn(n)


def simulate_conditional(model: SurrogateModel, points, n_sims: int, seed) -> np.ndarray:
    """Independent joint posterior draws, shape (n_sims, len(points))."""
    factor = posterior_factor(model, points)
    rng = np.random.default_rng(seed)
    normals = rng.standard_normal((n_sims, factor.n_unique))
    return factor.draw(normals)


@dataclass(frozen=True)
class MultiSurrogate:
    models: Tuple[SurrogateModel, ...]

    def __post_init__(self):
        object.__setattr__(self, 'models', tuple(self.models))

    @property
    def m(self) -> int:
        return len(self.models)

    @property
    def dim(self) -> int:
        return self.models[0].dim

    @property
    def inputs(self) -> np.ndarray:
        return self.models[0].inputs

    def predict(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """Means and sds with the objective as the last axis."""
        preds = [model.predict(x) for model in self.models]
        means = np.stack([p[0] for p in preds], axis=-1)
        sds = np.stack([p[1] for p in preds], axis=-1)
        return means, sds

    def simulate(self, points, n_sims: int, seed) -> np.ndarray:
        """Joint draws for every objective, shape (m, n_sims, len(points))."""
        seeds = spawn_seeds(seed, self.m)
        return np.stack([simulate_conditional(model, points, n_sims, s)
                         for model, s in zip(self.models, seeds)])


def fit_multi(xs, ys, config: Optional[GPConfig] = None, domain: Optional[BoxDomain] = None,
              workers: int = 1) -> MultiSurrogate:
    """Fit one independent GP per objective column of ys."""
    config = config or GPConfig()
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    configs = [replace(config, seed=config.seed + j) for j in range(ys.shape[1])]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(lambda j: fit(xs, ys[:, j], configs[j], domain), range(ys.shape[1])))
    else:
        models = [fit(xs, ys[:, j], configs[j], domain) for j in range(ys.shape[1])]
    return MultiSurrogate(models=tuple(models))
