"""
Experiment Manager for TargetMO.
Back-ends of the run, replicate and plotdata commands: runs configurations,
replicates them over derived seeds and writes every output file.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src import constants as C
from src.core.criteria import ehi, mei, mqei_mc, qmei_mc
from src.core.gp import GPConfig, fit_multi
from src.core.history import RunHistory
from src.core.metrics import (
    MetricReport,
    aggregate,
    compute_report,
    format_table,
    reports_frame,
    restricted_reference,
)
from src.core.pareto import EmpiricalFront
from src.core.problems import OracleSet, Problem, pareto_oracle
from src.core.targeting import estimate_center
from src.errors import CapabilityError, ConfigError, RunAbortedError
from src.managers.experiment_settings import ExperimentSettings, ExperimentSpec, RunConfig
from src.managers.targeting_manager import TargetingManager
from src.utils.helpers import atomic_write_frame, derive_seed, load_json, read_frame, resolve_worker_count, save_json

GRID_SIZE = 200


class ExperimentManager:
    """Runs experiments described by an ExperimentSpec and writes their outputs."""

    def __init__(self, spec: ExperimentSpec, output_dir: str, logger=None, settings: Optional[ExperimentSettings] = None):
        self.spec = spec
        self.output_dir = output_dir
        self.logger = logger
        self.settings = settings
        self._oracles: Dict[Tuple[str, int], Optional[OracleSet]] = {}

    def log(self, message: str, force: bool = False):
        if self.logger and (force or self.spec.run.debug.get('verbose_logging', False)):
            self.logger.append(message)

    def _prepare_output(self):
        os.makedirs(self.output_dir, exist_ok=True)
        if self.settings is not None:
            self.settings.save_effective(self.output_dir, self.spec)

    def oracle_for(self, problem: Problem) -> Optional[OracleSet]:
        key = (problem.name, problem.d)
        if key not in self._oracles:
            try:
                self._oracles[key] = pareto_oracle(problem, self.spec.oracle_resolution)
            except CapabilityError as e:
                self.log(f"No reference sets for {problem.name}: {e.message}", force=True)
                self._oracles[key] = None
        return self._oracles[key]

    def metric_reference(self, config: RunConfig, oracle: Optional[OracleSet]) -> Optional[np.ndarray]:
        """The run's R, or R_w of the true front when targeting the center."""
        if config.reference is not None:
            return config.reference
        if oracle is None:
            return None
        center = estimate_center(EmpiricalFront(oracle.py), oracle.ideal, oracle.nadir)
        return restricted_reference(center, oracle.nadir, self.spec.restricted_w[0])

    def _reports(self, config: RunConfig, history: RunHistory, seed: int) -> List[MetricReport]:
        problem = config.make_problem()
        oracle = self.oracle_for(problem)
        reference = self.metric_reference(config, oracle)
        if reference is None:
            return []
        reports = [compute_report(history, reference, oracle, self.spec.restricted_w, config.label, seed)]
        if config.algorithm == 'nsga2':
            pop = int(config.nsga2.get('pop', 20))
            for generation in config.nsga2.get('report_generations') or []:
                truncated = history.truncated(pop * (int(generation) + 1))
                reports.append(compute_report(truncated, reference, oracle, self.spec.restricted_w,
                                              f"{config.label}_{int(generation)}", seed))
        return reports

    @staticmethod
    def write_history(directory: str, history: RunHistory):
        atomic_write_frame(os.path.join(directory, C.HISTORY_FILE), history.to_frame())
        atomic_write_frame(os.path.join(directory, C.ITERATIONS_FILE), history.iterations_frame())

    def run(self) -> RunHistory:
        """
        Execute the base configuration once.

        Writes history.csv, iterations.csv, summary.json and config.json into
        the output directory. A run aborted by a GP failure still writes its
        partial history before the error propagates.
        """
        self._prepare_output()
        config = self.spec.run
        try:
            history = TargetingManager(config, self.logger).run()
        except RunAbortedError as e:
            self.write_history(self.output_dir, e.history)
            self._write_summary(config, e.history, [])
            raise
        self.write_history(self.output_dir, history)
        reports = self._reports(config, history, 0)
        self._write_summary(config, history, reports)
        self.log(f"Run finished: {history.n_evaluations} evaluations, status {history.status}", force=True)
        return history

    def _write_summary(self, config: RunConfig, history: RunHistory, reports: List[MetricReport]):
        front = history.front() if history.n_evaluations else None
        summary = {
            'version': C.VERSION,
            'label': config.label,
            'problem': config.problem,
            'algorithm': config.algorithm,
            'criterion': config.criterion,
            'q': config.q,
            'status': history.status,
            'diagnostic': history.diagnostic,
            'n_evaluations': history.n_evaluations,
            'n_iterations': history.n_iterations,
            'wallclock': (history.n_evaluations - history.n_initial) / max(1, config.q),
            'converged_at': history.converged_at,
            'reference': None if config.reference is None else config.reference.tolist(),
            'front': [] if front is None else front.points.tolist(),
            'metrics': [report.to_row() for report in reports],
        }
        save_json(os.path.join(self.output_dir, C.SUMMARY_FILE), summary)

    def _replication(self, config: RunConfig, replication: int) -> List[MetricReport]:
        seeds = {name: derive_seed(seed, replication) for name, seed in config.seeds.items()}
        replica = replace(config, seeds=seeds)
        directory = os.path.join(self.output_dir, 'runs', _slug(config.label), f"seed_{replication:03d}")
        os.makedirs(directory, exist_ok=True)
        try:
            history = TargetingManager(replica, self.logger).run()
        except RunAbortedError as e:
            self.write_history(directory, e.history)
            self.log(f"{config.label} seed {replication} aborted: {e.message}", force=True)
            return []
        self.write_history(directory, history)
        self.log(f"{config.label} seed {replication}: {history.n_evaluations} evaluations, "
                 f"status {history.status}", force=True)
        return self._reports(replica, history, replication)

    def replicate(self) -> pd.DataFrame:
        """
        Run every configuration n_replications times with derived seeds.

        Writes per_seed.csv (one row per label and seed), table.csv (mean (std)
        cells with the x/ERT marker) and summary.json (numeric aggregates).

        Returns:
            The numeric aggregate table
        """
        self._prepare_output()
        for config in self.spec.configurations:
            self.oracle_for(config.make_problem())
        tasks = [(config, r) for config in self.spec.configurations for r in range(self.spec.n_replications)]
        workers = min(resolve_worker_count(), len(tasks))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda task: self._replication(*task), tasks))
        else:
            results = [self._replication(*task) for task in tasks]

        reports = [report for batch in results for report in batch]
        per_seed = reports_frame(reports)
        if per_seed.empty:
            raise RunAbortedError("No replication produced metrics")
        keep = ['label', 'seed', 'n_evaluations'] + [m for m in self.spec.metrics if m in per_seed]
        keep += [c for c in per_seed.columns if c.startswith('restricted_hypervolume_w') or c == 'oracle_gap']
        per_seed = per_seed[keep]
        atomic_write_frame(os.path.join(self.output_dir, C.PER_SEED_FILE), per_seed)

        summary = aggregate(per_seed, self.spec.metrics)
        atomic_write_frame(os.path.join(self.output_dir, C.TABLE_FILE), format_table(summary, self.spec.metrics))
        save_json(os.path.join(self.output_dir, C.SUMMARY_FILE), {
            'version': C.VERSION,
            'table_id': self.spec.table_id,
            'n_replications': self.spec.n_replications,
            'rows': summary.replace({np.nan: None}).to_dict(orient='records'),
        })
        return summary


def _slug(label: str) -> str:
    return ''.join(ch if ch.isalnum() or ch in '-_' else '_' for ch in label) or 'run'


def plotdata(run_dir: str, grid_size: int = GRID_SIZE, logger=None) -> List[str]:
    """
    Write plot-ready CSVs next to a finished run: empirical fronts after every
    iteration, the R-hat trajectory, the criterion on a grid (when the search
    space of the criterion is at most two-dimensional) and the oracle sets.

    Raises:
        ConfigError: the run directory lacks history.csv or config.json
    """
    history_path = os.path.join(run_dir, C.HISTORY_FILE)
    config_path = os.path.join(run_dir, C.CONFIG_FILE)
    for path in (history_path, config_path):
        if not os.path.exists(path):
            raise ConfigError(f"Missing run output: {path}")

    data = load_json(config_path)
    data.pop('_metadata', None)
    spec = ExperimentSettings(data={k: v for k, v in data.items() if k != 'output_dir'}).load()
    config = spec.run
    problem = config.make_problem()
    history = RunHistory.from_frame(read_frame(history_path), q=config.q)
    written = []

    rows = []
    for iteration in sorted(set(e.iteration for e in history.evaluations)):
        upto = max(e.eval_index for e in history.evaluations if e.iteration <= iteration)
        front = history.front(upto)
        for y, x in zip(front.points, front.source_designs):
            row = {'iter': iteration}
            row.update({f"x{k + 1}": x[k] for k in range(history.d)})
            row.update({f"f{j + 1}": y[j] for j in range(history.m)})
            rows.append(row)
    path = os.path.join(run_dir, C.FRONT_SNAPSHOTS_FILE)
    atomic_write_frame(path, pd.DataFrame(rows))
    written.append(path)

    trajectory = []
    seen = set()
    for e in history.evaluations:
        if e.iteration > 0 and e.iteration not in seen and e.rhat is not None:
            seen.add(e.iteration)
            row = {'iter': e.iteration}
            row.update({f"Rhat{j + 1}": e.rhat[j] for j in range(history.m)})
            row['line_uncertainty'] = e.line_uncertainty
            trajectory.append(row)
    path = os.path.join(run_dir, C.REFPOINT_TRAJECTORY_FILE)
    atomic_write_frame(path, pd.DataFrame(trajectory, columns=['iter'] + [f"Rhat{j + 1}" for j in range(history.m)]
                                          + ['line_uncertainty']))
    written.append(path)

    if config.algorithm == 'bayes' and (problem.d <= 2 and config.q == 1 or config.q * problem.d <= 2):
        path = os.path.join(run_dir, C.CRITERION_GRID_FILE)
        atomic_write_frame(path, criterion_grid(config, problem, history, grid_size))
        written.append(path)

    try:
        oracle = pareto_oracle(problem, spec.oracle_resolution)
    except CapabilityError:
        oracle = None
    if oracle is not None:
        path = os.path.join(run_dir, C.ORACLE_FILE)
        atomic_write_frame(path, oracle.to_frame())
        written.append(path)

    if logger:
        logger.append(f"Plot data written: {', '.join(os.path.basename(p) for p in written)}")
    return written


def criterion_grid(config: RunConfig, problem: Problem, history: RunHistory, grid_size: int = GRID_SIZE) -> pd.DataFrame:
    """
    Criterion values on a regular grid for the GPs fitted to the initial design,
    at the first R-hat of the run (or R when the run never iterated).

    For q = 1 the grid spans the design space; for a batch of two scalar designs
    it spans the pairs (x(1), x(2)).
    """
    initial = history.truncated(history.n_initial)
    gp_options = config.gp or {}
    models = fit_multi(initial.X, initial.Y,
                       GPConfig(n_starts=int(gp_options.get('n_starts', C.GP_N_STARTS)),
                                initial_nugget=float(gp_options.get('initial_nugget', C.GP_INITIAL_NUGGET)),
                                seed=derive_seed(config.seeds['optimizer'], 1, 0)),
                       problem.domain)
    rhats = [e.rhat for e in history.evaluations if e.rhat is not None]
    if rhats:
        rhat = rhats[0]
    elif config.reference is not None:
        rhat = config.reference
    else:
        rhat = history.front().points.max(axis=0)
    front = initial.front()

    if config.q == 1:
        axes = [np.linspace(lo, hi, grid_size) for lo, hi in zip(problem.domain.lower, problem.domain.upper)]
        mesh = np.meshgrid(*axes, indexing='ij')
        points = np.column_stack([g.ravel() for g in mesh])
        frame = pd.DataFrame({f"x{k + 1}": points[:, k] for k in range(problem.d)})
        frame['mEI'] = mei(models, points, rhat)
        if problem.m == 2:
            frame['EHI'] = ehi(models, points, rhat, front)
        return frame

    axis = np.linspace(problem.domain.lower[0], problem.domain.upper[0], grid_size)
    first, second = np.meshgrid(axis, axis, indexing='ij')
    seed = derive_seed(config.seeds['mc'], 1, 2)
    q_values, mq_values = [], []
    for a, b in zip(first.ravel(), second.ravel()):
        batch = np.array([[a], [b]])
        q_values.append(qmei_mc(models, batch, rhat, config.n_mc, seed))
        mq_values.append(mqei_mc(models, batch, rhat, config.n_mc, seed))
    return pd.DataFrame({'x1_1': first.ravel(), 'x1_2': second.ravel(), 'q-mEI': q_values, 'mq-EI': mq_values})
