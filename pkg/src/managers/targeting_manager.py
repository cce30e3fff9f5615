"""
Targeting Manager for TargetMO.
Runs the sequential (mEI / EHI) and batch (q-mEI / mq-EI) targeting loops.
"""

from typing import Callable, Optional

import numpy as np

from src.constants import DEAD_CRITERION
from src.core.convergence import converged, default_epsilon, line_uncertainty
from src.core.criteria import ehi, mei, mei_gradient, mqei_mc, normalized_sd, qmei_mc
from src.core.gp import GPConfig, MultiSurrogate, fit_multi
from src.core.history import (
    STATUS_ABORTED,
    STATUS_BUDGET,
    STATUS_CONVERGED,
    STATUS_RUNNING,
    STATUS_STOPPED,
    IterationRecord,
    RunHistory,
)
from src.core.nsga2 import nsga2
from src.core.pareto import BrokenLine
from src.core.search import OptimizerConfig, lhs, maximize, maximize_batch, multistart
from src.core.targeting import (
    FrontEstimates,
    SimulatedFronts,
    adapt_reference_detailed,
    estimate_front,
    simulate_fronts,
)
from src.errors import ConditioningError, ConfigError, DataError, GeometryError, RunAbortedError
from src.managers.experiment_settings import RunConfig
from src.utils.helpers import derive_seed


class TargetingManager:
    """
    Drives one run of a RunConfig.

    Each iteration estimates Ideal and Nadir from simulated fronts, adapts the
    reference point (or targets the estimated center), maximizes the criterion,
    evaluates, refits and measures the line-uncertainty. The fronts simulated
    after a refit serve both that iteration's stopping test and the next
    iteration's estimates.
    """

    def __init__(self, config: RunConfig, logger=None, stop_flag_callback: Optional[Callable[[], bool]] = None):
        self.config = config
        self.logger = logger
        self.stop_flag_callback = stop_flag_callback
        self.debug = config.debug or {}
        self.problem = config.make_problem()
        self.domain = self.problem.domain

    def log(self, message: str, force: bool = False):
        if self.logger and (force or self.debug.get('verbose_logging', False)):
            self.logger.append(message)

    def run(self) -> RunHistory:
        if self.config.algorithm == 'nsga2':
            return self.run_nsga2()
        if self.config.is_batch:
            return self.run_batch_targeting()
        return self.run_targeting()

    def run_targeting(self) -> RunHistory:
        """Sequential loop: one design per iteration maximizing mEI (or EHI) at R-hat."""
        return self._loop()

    def run_batch_targeting(self) -> RunHistory:
        """Batch loop: q designs per iteration maximizing q-mEI (or mq-EI) at R-hat."""
        if not self.config.is_batch:
            raise ConfigError("unsupported criterion/batch combination", details=self.config.q)
        return self._loop()

    def run_nsga2(self) -> RunHistory:
        options = self.config.nsga2 or {}
        pop = int(options.get('pop', 20))
        generations = int(options.get('generations', 20))
        self.log(f"NSGA-II on {self.problem.name}: pop={pop}, generations={generations}", force=True)
        history = nsga2(self.problem, pop, generations, seed=self.config.seeds['doe'],
                        logger=self.logger if self.debug.get('verbose_logging') else None)
        history.label = self.config.label
        return history

    # Loop internals

    def _fit(self, history: RunHistory, iteration: int) -> MultiSurrogate:
        gp_options = self.config.gp or {}
        gp_config = GPConfig(n_starts=int(gp_options.get('n_starts', GPConfig.n_starts)),
                             initial_nugget=float(gp_options.get('initial_nugget', GPConfig.initial_nugget)),
                             seed=derive_seed(self.config.seeds['optimizer'], iteration, 0))
        try:
            return fit_multi(history.X, history.Y, gp_config, self.domain)
        except (ConditioningError, DataError) as e:
            history.status = STATUS_ABORTED
            history.diagnostic = f"GP fit failed at iteration {iteration}: {e.message}"
            self.log(history.diagnostic, force=True)
            raise RunAbortedError(history.diagnostic, details=history)

    def _simulate(self, models: MultiSurrogate, iteration: int) -> SimulatedFronts:
        return simulate_fronts(models, self.domain, self.config.n_sims, self.config.n_sim_points,
                               seed=derive_seed(self.config.seeds['mc'], iteration, 1))

    def _optimizer_config(self, iteration: int) -> OptimizerConfig:
        seed = derive_seed(self.config.seeds['optimizer'], iteration, 1)
        if self.config.is_batch:
            return OptimizerConfig.for_batch(self.config.q, self.domain.dim, seed=seed, **self.config.optimizer)
        return OptimizerConfig.for_dimension(self.domain.dim, seed=seed, **self.config.optimizer)

    def _target(self, estimates: FrontEstimates) -> np.ndarray:
        """The user's reference point, or the estimated center when none is given."""
        if self.config.reference is not None:
            return self.config.reference
        if np.all(np.isfinite(estimates.center_hat)):
            return estimates.center_hat
        return estimates.nadir_hat

    def _select(self, models: MultiSurrogate, front, rhat: np.ndarray, iteration: int):
        """Maximize the configured criterion; returns (designs (q, d), value)."""
        config = self._optimizer_config(iteration)
        criterion = self.config.criterion
        if criterion == 'mEI':
            x, value = maximize(lambda x: mei(models, x, rhat), self.domain, config,
                                gradient=lambda x: mei_gradient(models, x, rhat), vectorized=True)
            return x[None, :], value
        if criterion == 'EHI':
            seed = derive_seed(self.config.seeds['mc'], iteration, 2)
            x, value = maximize(lambda x: ehi(models, x, rhat, front, n_mc=self.config.n_mc, seed=seed),
                                self.domain, config, vectorized=True)
            return x[None, :], value
        estimator = qmei_mc if criterion == 'q-mEI' else mqei_mc
        seed = derive_seed(self.config.seeds['mc'], iteration, 2)
        fixed = None
        if (self.config.optimizer or {}).get('fixed_first'):
            # asynchronous variant: the first point is the mEI maximizer, the others complete it
            single = OptimizerConfig.for_dimension(self.domain.dim, seed=config.seed, **self.config.optimizer)
            x, _ = maximize(lambda x: mei(models, x, rhat), self.domain, single,
                            gradient=lambda x: mei_gradient(models, x, rhat), vectorized=True)
            fixed = x[None, :]
        return maximize_batch(lambda batch: estimator(models, batch, rhat, self.config.n_mc, seed),
                              self.domain, self.config.q, config, fixed=fixed)

    def _fallback(self, models: MultiSurrogate, iteration: int) -> np.ndarray:
        """Designs of largest normalized posterior sd, q distinct ones for a batch."""
        config = self._optimizer_config(iteration)
        config = OptimizerConfig(n_starts=max(config.n_starts, self.config.q), n_raw=config.n_raw // self.config.q,
                                 local_budget=config.local_budget, seed=config.seed)
        refined = multistart(lambda x: normalized_sd(models, x), self.domain, config, vectorized=True)
        chosen = []
        for x, _ in refined:
            if all(np.max(np.abs(x - c)) > 1e-9 for c in chosen):
                chosen.append(x)
            if len(chosen) == self.config.q:
                break
        if len(chosen) < self.config.q:
            extra = lhs(self.config.q - len(chosen), self.domain, config.seed)
            chosen.extend(extra)
        return np.array(chosen)

    def _uncertainty(self, sims: SimulatedFronts, history: RunHistory):
        estimates = estimate_front(history.front(), sims)
        try:
            line = BrokenLine.through(estimates.ideal_hat, self._target(estimates), estimates.nadir_hat)
        except GeometryError:
            return None, None
        report = line_uncertainty(sims, line, self.config.n_quad)
        epsilon = self.config.epsilon or default_epsilon(line, self.config.epsilon_relative)
        return report, epsilon

    def _loop(self) -> RunHistory:
        cfg = self.config
        q = cfg.q
        history = RunHistory(d=self.problem.d, m=self.problem.m, q=q, budget=cfg.budget,
                             n_initial=cfg.initial_doe_size, label=cfg.label)

        designs = lhs(cfg.initial_doe_size, self.domain, cfg.seeds['doe'])
        for x, y in zip(designs, self.problem.evaluate(designs)):
            history.add_evaluation(x, y, 0)
        self.log(f"{cfg.label} on {self.problem.name}: initial design of {cfg.initial_doe_size}, "
                 f"budget {cfg.budget}", force=True)

        if history.n_evaluations + q > cfg.budget:
            history.status = STATUS_BUDGET
            return history

        models = self._fit(history, 0)
        sims = self._simulate(models, 0)
        iteration = 0

        while history.n_evaluations + q <= cfg.budget:
            if self.stop_flag_callback and self.stop_flag_callback():
                history.status = STATUS_STOPPED
                self.log("Stop requested, ending run", force=True)
                break
            iteration += 1
            front = history.front()
            estimates = estimate_front(front, sims)
            ideal, nadir = estimates.ideal_hat, estimates.nadir_hat
            update = adapt_reference_detailed(self._target(estimates), front, ideal, nadir)
            rhat = update.point
            self.log(f"Iteration {iteration}: R-hat case '{update.case}'"
                     f"{' (repaired)' if update.repaired else ''}")

            batch, value = self._select(models, front, rhat, iteration)
            fallback = not value >= DEAD_CRITERION
            if fallback:
                self.log(f"Iteration {iteration}: criterion {value:.3e} below {DEAD_CRITERION:g}, "
                         f"exploring the largest posterior sd", force=True)
                batch = self._fallback(models, iteration)

            values = self.problem.evaluate(batch)
            records = [history.add_evaluation(x, y, iteration, rhat, float(value)) for x, y in zip(batch, values)]

            models = self._fit(history, iteration)
            sims = self._simulate(models, iteration)
            report, epsilon = self._uncertainty(sims, history)
            uncertainty = report.value if report is not None else float('nan')
            for record in records:
                record.line_uncertainty = uncertainty

            history.iterations.append(IterationRecord(
                iteration=iteration, rhat=rhat, ideal_hat=ideal, nadir_hat=nadir, center_hat=estimates.center_hat,
                criterion_value=float(value), line_uncertainty=uncertainty, n_evaluations=history.n_evaluations,
                wallclock=(history.n_evaluations - cfg.initial_doe_size) / q, fallback=fallback,
                reference_case=update.case))
            self.log(f"Iteration {iteration}: R-hat={np.round(rhat, 6).tolist()} criterion={value:.6g} "
                     f"line-uncertainty={uncertainty:.6g}", force=True)

            if report is not None and converged(report, epsilon):
                if history.converged_at is None:
                    history.converged_at = iteration
                if cfg.stop_on_convergence:
                    history.status = STATUS_CONVERGED
                    self.log(f"Converged at iteration {iteration} (epsilon={epsilon:.3g})", force=True)
                    break

        if history.status == STATUS_RUNNING:
            history.status = STATUS_BUDGET
        return history
