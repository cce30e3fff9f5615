"""
Experiment settings for TargetMO.
Loads JSON experiment specs, merges them over the defaults and validates them.
"""

import copy
import json
import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np

from src import constants as C
from src.core.problems import Problem, make_problem
from src.errors import ConfigError
from src.utils.helpers import derive_seed, save_json

DEFAULTS: Dict[str, Any] = {
    'problem': 'quadratic',
    'problem_options': {},
    'algorithm': 'bayes',
    'criterion': 'mEI',
    'q': 1,
    'budget': 13,
    'initial_doe_size': 3,
    'reference': 'default',
    'epsilon': None,
    'epsilon_relative': C.EPSILON_RELATIVE,
    'stop_on_convergence': True,
    'seed': 0,
    'seeds': None,
    'n_mc': C.N_MC,
    'n_sims': C.N_SIMS,
    'n_sim_points': C.N_SIM_POINTS,
    'n_quad': C.N_QUAD,
    'gp': {'n_starts': C.GP_N_STARTS, 'initial_nugget': C.GP_INITIAL_NUGGET},
    'optimizer': {},
    'nsga2': {'pop': 20, 'generations': 20, 'report_generations': []},
    'n_replications': 1,
    'metrics': list(C.METRICS),
    'restricted_w': list(C.RESTRICTED_W),
    'oracle_resolution': C.ORACLE_RESOLUTION,
    'variants': [],
    'table_id': '',
    'label': '',
    'debug': {'verbose_logging': False},
}


@dataclass
class RunConfig:
    problem: str
    budget: int
    q: int
    initial_doe_size: int
    reference: Optional[np.ndarray]
    criterion: str
    epsilon: Optional[float]
    seeds: Dict[str, int]
    problem_options: Dict[str, Any] = field(default_factory=dict)
    algorithm: str = 'bayes'
    epsilon_relative: float = C.EPSILON_RELATIVE
    stop_on_convergence: bool = True
    n_mc: int = C.N_MC
    n_sims: int = C.N_SIMS
    n_sim_points: int = C.N_SIM_POINTS
    n_quad: int = C.N_QUAD
    gp: Dict[str, Any] = field(default_factory=dict)
    optimizer: Dict[str, Any] = field(default_factory=dict)
    nsga2: Dict[str, Any] = field(default_factory=dict)
    label: str = ''
    debug: Dict[str, Any] = field(default_factory=dict)

    def make_problem(self) -> Problem:
        return make_problem(self.problem, self.problem_options)

    @property
    def is_batch(self) -> bool:
        return self.q > 1

    def to_dict(self) -> Dict[str, Any]:
        data = copy.deepcopy(self.__dict__)
        data['reference'] = None if self.reference is None else [float(v) for v in self.reference]
        return data


@dataclass
class ExperimentSpec:
    run: RunConfig
    n_replications: int = 1
    metrics: List[str] = field(default_factory=lambda: list(C.METRICS))
    restricted_w: List[float] = field(default_factory=lambda: list(C.RESTRICTED_W))
    oracle_resolution: int = C.ORACLE_RESOLUTION
    variants: List[RunConfig] = field(default_factory=list)
    table_id: str = ''
    output_dir: Optional[str] = None
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def configurations(self) -> List[RunConfig]:
        """The base run followed by every variant; a spec without variants compares nothing else."""
        return [self.run] + self.variants


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def seed_streams(base: int) -> Dict[str, int]:
    """Independent DoE / Monte-Carlo / optimizer seeds mixed from one base seed."""
    return {name: derive_seed(base, index) for index, name in enumerate(('doe', 'mc', 'optimizer'))}


def build_run_config(data: Dict[str, Any]) -> RunConfig:
    """Validate one merged configuration dictionary."""
    problem_name = data['problem']
    if problem_name not in C.PROBLEMS:
        raise ConfigError(f"Unknown problem '{problem_name}'")
    problem = make_problem(problem_name, data.get('problem_options'))

    algorithm = data['algorithm']
    if algorithm not in C.ALGORITHMS:
        raise ConfigError(f"Unknown algorithm '{algorithm}'")
    criterion = data['criterion']
    if criterion not in C.CRITERIA:
        raise ConfigError(f"Unknown criterion '{criterion}'")

    q = int(data['q'])
    budget = int(data['budget'])
    doe = int(data['initial_doe_size'])
    if q < 1:
        raise ConfigError(f"Batch size q must be at least 1, got {q}")
    if algorithm == 'bayes':
        if criterion == 'EHI' and q > 1 or criterion in C.BATCH_CRITERIA and q == 1:
            raise ConfigError("unsupported criterion/batch combination")
        if criterion == 'mEI' and q > 1:
            criterion = 'q-mEI'
        if doe < 2:
            raise ConfigError(f"Initial design needs at least 2 points, got {doe}")
        if budget < doe:
            raise ConfigError(f"Budget {budget} is smaller than the initial design {doe}")

    reference = data['reference']
    if isinstance(reference, str):
        if reference != 'default':
            raise ConfigError(f"Unknown reference '{reference}'")
        reference = problem.reference
    if reference is not None:
        reference = np.asarray(reference, dtype=float)
        if reference.shape != (problem.m,):
            raise ConfigError(f"Reference needs {problem.m} values, got {reference.tolist()}")

    epsilon = data.get('epsilon')
    if epsilon is not None and float(epsilon) <= 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    if float(data['epsilon_relative']) <= 0:
        raise ConfigError("epsilon_relative must be positive")

    seeds = data.get('seeds') or seed_streams(int(data['seed']))
    missing = {'doe', 'mc', 'optimizer'} - set(seeds)
    if missing:
        raise ConfigError(f"Missing seeds: {sorted(missing)}")

    for key in ('n_mc', 'n_sims', 'n_quad'):
        if int(data[key]) < 1:
            raise ConfigError(f"{key} must be positive")
    if int(data['n_sim_points']) < 0:
        raise ConfigError("n_sim_points must be nonnegative")
    nsga = data.get('nsga2') or {}
    if algorithm == 'nsga2' and (int(nsga.get('pop', 20)) < 4 or int(nsga.get('pop', 20)) % 2):
        raise ConfigError("NSGA-II population must be even and at least 4")

    return RunConfig(
        problem=problem_name, budget=budget, q=q, initial_doe_size=doe, reference=reference,
        criterion=criterion, epsilon=None if epsilon is None else float(epsilon),
        seeds={k: int(v) for k, v in seeds.items()}, problem_options=dict(data.get('problem_options') or {}),
        algorithm=algorithm, epsilon_relative=float(data['epsilon_relative']),
        stop_on_convergence=bool(data['stop_on_convergence']), n_mc=int(data['n_mc']),
        n_sims=int(data['n_sims']), n_sim_points=int(data['n_sim_points']), n_quad=int(data['n_quad']),
        gp=dict(data.get('gp') or {}), optimizer=dict(data.get('optimizer') or {}), nsga2=dict(nsga),
        label=data.get('label') or _default_label(algorithm, criterion, q), debug=dict(data.get('debug') or {}),
    )


def _default_label(algorithm: str, criterion: str, q: int) -> str:
    if algorithm == 'nsga2':
        return 'NSGA-II'
    return criterion if q == 1 else f"{q}{criterion}"


class ExperimentSettings:
    """
    Reads an experiment spec file, merges it over DEFAULTS and validates it.
    The effective configuration is echoed into the output directory.
    """

    def __init__(self, path: Optional[str] = None, data: Optional[Dict[str, Any]] = None):
        self.path = path
        self.user_data = data if data is not None else self._read(path)
        self.effective: Dict[str, Any] = {}

    @staticmethod
    def _read(path: Optional[str]) -> Dict[str, Any]:
        if not path:
            raise ConfigError("No spec file given")
        if not os.path.exists(path):
            raise ConfigError(f"Spec file not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Spec file is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigError("Spec file must hold a JSON object")
        return data

    def load(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> ExperimentSpec:
        """
        Build the validated spec.

        Args:
            seed: Base seed overriding the file's; the three seed streams are re-derived from it
            output_dir: Output directory overriding the file's

        Returns:
            ExperimentSpec with the base run and its variants
        """
        unknown = set(self.user_data) - set(DEFAULTS) - {'output_dir'}
        if unknown:
            raise ConfigError(f"Unknown keys in spec: {sorted(unknown)}")
        data = _merge(DEFAULTS, self.user_data)
        if seed is not None:
            data['seed'] = int(seed)
            data['seeds'] = None
        run = build_run_config(data)

        variants = []
        for index, override in enumerate(data['variants']):
            if not isinstance(override, dict) or 'label' not in override:
                raise ConfigError(f"Variant {index} needs a label")
            base = {k: v for k, v in data.items() if k != 'variants'}
            variant = _merge(base, override)
            if 'seeds' not in override and 'seed' not in override:
                variant['seeds'] = run.seeds
            variants.append(build_run_config(variant))

        n_replications = int(data['n_replications'])
        if n_replications < 1:
            raise ConfigError("n_replications must be at least 1")
        metrics = list(data['metrics'])
        unknown_metrics = set(metrics) - set(C.METRICS)
        if unknown_metrics:
            raise ConfigError(f"Unknown metrics: {sorted(unknown_metrics)}")
        restricted_w = [float(w) for w in data['restricted_w']]
        if any(not 0 < w <= 1 for w in restricted_w):
            raise ConfigError("restricted_w values must lie in (0, 1]")

        self.effective = data
        return ExperimentSpec(run=run, n_replications=n_replications, metrics=metrics,
                              restricted_w=restricted_w, oracle_resolution=int(data['oracle_resolution']),
                              variants=variants, table_id=str(data['table_id']),
                              output_dir=output_dir or data.get('output_dir'), raw=data)

    def save_effective(self, output_dir: str, spec: ExperimentSpec) -> str:
        """Write the effective configuration (defaults included) for provenance."""
        payload = copy.deepcopy(self.effective)
        payload['seeds'] = spec.run.seeds
        payload['reference'] = spec.run.to_dict()['reference']
        payload['_metadata'] = {'version': C.VERSION, 'source': self.path,
                                'created': datetime.now().isoformat(timespec='seconds')}
        path = os.path.join(output_dir, C.CONFIG_FILE)
        save_json(path, payload)
        return path
