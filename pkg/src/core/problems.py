"""
Benchmark problems and their Pareto-set oracles.

quadratic  - one design variable, two parabolas; P_X = [0.2, 0.9]
zdt3       - d-dimensional ZDT3 with five disconnected sub-fronts
p1         - the two-variable P1 problem built from the Branin function
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

from src.constants import ORACLE_COMPONENT_GAP, ORACLE_RESOLUTION
from src.core.pareto import BoxDomain, nondominated_mask
from src.errors import CapabilityError, ConfigError, DimensionError


@dataclass
class OracleSet:
    """Dense sampling of the Pareto set/front and of the part dominating the target."""
    px: np.ndarray
    py: np.ndarray
    pxt: np.ndarray
    pyt: np.ndarray
    max_gap: float = 0.0

    def __len__(self):
        return self.py.shape[0]

    def to_frame(self) -> pd.DataFrame:
        columns = {f"x{k + 1}": self.px[:, k] for k in range(self.px.shape[1])}
        columns.update({f"f{j + 1}": self.py[:, j] for j in range(self.py.shape[1])})
        return pd.DataFrame(columns)

    @property
    def ideal(self) -> np.ndarray:
        return self.py.min(axis=0)

    @property
    def nadir(self) -> np.ndarray:
        return self.py.max(axis=0)

    def components(self, gap: float) -> List[np.ndarray]:
        """Split a bi-objective front into connected pieces wherever consecutive f1 values jump by more than gap."""
        order = np.argsort(self.py[:, 0], kind='stable')
        points = self.py[order]
        cuts = np.flatnonzero(np.diff(points[:, 0]) > gap) + 1
        return np.split(points, cuts)


@dataclass
class Problem:
    name: str
    d: int
    m: int
    domain: BoxDomain
    evaluator: Callable[[np.ndarray], np.ndarray]
    reference: Optional[np.ndarray] = None
    oracle_kind: Optional[str] = None
    options: dict = field(default_factory=dict)

    def evaluate(self, x) -> np.ndarray:
        """Objective vector of one design, or an (n, m) array for an (n, d) array."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise DimensionError(f"{self.name} expects {self.d} variables, got {x.shape[-1]}")
        if x.ndim == 1:
            return self.evaluator(x[None, :])[0]
        return self.evaluator(x)


def _quadratic(x: np.ndarray) -> np.ndarray:
    t = x[:, 0]
    return np.column_stack([0.6 * t ** 2 - 0.24 * t + 0.1, t ** 2 - 1.8 * t + 1.0])


def quadratic_pair() -> Problem:
    return Problem('quadratic', 1, 2, BoxDomain.unit(1), _quadratic,
                   reference=np.array([0.15, 0.42]), oracle_kind='interval')


def quadratic_domination_interval(r) -> Optional[tuple]:
    """Designs of [0, 1] whose image weakly dominates r, from the roots of both parabolas."""
    r = np.asarray(r, dtype=float)
    lo, hi = 0.0, 1.0
    for coeffs, level in (((0.6, -0.24, 0.1), r[0]), ((1.0, -1.8, 1.0), r[1])):
        a, b, c = coeffs
        disc = b * b - 4 * a * (c - level)
        if disc < 0:
            return None
        root = np.sqrt(disc)
        lo = max(lo, (-b - root) / (2 * a))
        hi = min(hi, (-b + root) / (2 * a))
    return (lo, hi) if lo <= hi else None


def _zdt3(x: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    f1 = x[:, 0]
    g = 1.0 + 9.0 * x[:, 1:].sum(axis=1) / (d - 1)
    ratio = f1 / g
    f2 = g * (1.0 - np.sqrt(ratio) - ratio * np.sin(10.0 * np.pi * f1))
    return np.column_stack([f1, f2])


def zdt3(d: int = 4) -> Problem:
    if d < 2:
        raise ConfigError(f"ZDT3 needs at least 2 variables, got {d}")
    return Problem('zdt3', d, 2, BoxDomain.unit(d), _zdt3,
                   reference=np.array([0.258, 0.670]), oracle_kind='curve', options={'d': d})


def _p1(x: np.ndarray) -> np.ndarray:
    b1 = 15.0 * x[:, 0] - 5.0
    b2 = 15.0 * x[:, 1]
    cos_term = (1.0 - 1.0 / (8.0 * np.pi)) * np.cos(b1) + 1.0
    f1 = (b2 - 5.1 * (b1 / (2.0 * np.pi)) ** 2 + 5.0 / np.pi * b1 - 6.0) ** 2 + 10.0 * cos_term
    f2 = (-np.sqrt((10.5 - b1) * (b1 + 5.5) * (b2 + 0.5))
          - (b2 - 5.1 * (b1 / (2.0 * np.pi)) ** 2 - 6.0) ** 2 / 30.0
          - cos_term / 3.0)
    return np.column_stack([f1, f2])


def p1() -> Problem:
    return Problem('p1', 2, 2, BoxDomain.unit(2), _p1,
                   reference=np.array([10.0, -23.0]), oracle_kind='grid')


def make_problem(name: str, options: Optional[dict] = None) -> Problem:
    options = options or {}
    if name == 'quadratic':
        return quadratic_pair()
    if name == 'zdt3':
        return zdt3(int(options.get('d', 4)))
    if name == 'p1':
        return p1()
    raise ConfigError(f"Unknown problem '{name}'")


def component_labels(py: np.ndarray, gap: float) -> np.ndarray:
    """Index of the connected piece of every front point, pieces numbered by increasing f1."""
    order = np.argsort(py[:, 0], kind='stable')
    jumps = np.diff(py[order, 0]) > gap
    labels = np.empty(py.shape[0], dtype=int)
    labels[order] = np.concatenate([[0], np.cumsum(jumps)])
    return labels


def _max_gap(py: np.ndarray) -> float:
    if py.shape[0] < 2:
        return 0.0
    ordered = py[np.argsort(py[:, 0], kind='stable')]
    return float(np.max(np.linalg.norm(np.diff(ordered, axis=0), axis=1)))


def pareto_oracle(problem: Problem, resolution: int = ORACLE_RESOLUTION, reference=None) -> OracleSet:
    """
    Dense sampling of the Pareto set and front of a benchmark problem.

    The targeted subsets hold the front points weakly dominating the reference
    (the problem's default when none is given). On a disconnected front they
    are further restricted to the piece holding the front point closest to the
    reference; for ZDT3 and its default target that is the second sub-front.
    """
    if problem.oracle_kind is None:
        raise CapabilityError(f"No Pareto oracle for problem '{problem.name}'")
    if resolution < 2:
        raise ConfigError("Oracle resolution must be at least 2")
    if problem.oracle_kind == 'interval':
        px = np.linspace(0.2, 0.9, resolution)[:, None]
        py = problem.evaluate(px)
    elif problem.oracle_kind == 'curve':
        # g = 1 on x2..xd = 0; the sampled curve is filtered to its non-dominated pieces
        x1 = np.linspace(0.0, 1.0, 10 * resolution)
        candidates = np.zeros((x1.size, problem.d))
        candidates[:, 0] = x1
        values = problem.evaluate(candidates)
        keep = nondominated_mask(values)
        px, py = candidates[keep], values[keep]
    elif problem.oracle_kind == 'grid':
        if problem.d != 2:
            raise CapabilityError(f"Grid oracle needs d = 2, problem '{problem.name}' has d = {problem.d}")
        axis = np.linspace(0.0, 1.0, resolution)
        g1, g2 = np.meshgrid(axis, axis, indexing='ij')
        candidates = np.column_stack([g1.ravel(), g2.ravel()])
        values = problem.evaluate(candidates)
        keep = nondominated_mask(values)
        px, py = candidates[keep], values[keep]
    else:
        raise CapabilityError(f"Unknown oracle kind '{problem.oracle_kind}'")

    target = problem.reference if reference is None else np.asarray(reference, dtype=float)
    if target is not None:
        inside = np.all(py <= target, axis=1)
        if problem.oracle_kind == 'curve' and np.any(inside):
            labels = component_labels(py, ORACLE_COMPONENT_GAP)
            nearest = int(np.argmin(np.linalg.norm(py - target, axis=1)))
            inside &= labels == labels[nearest]
    else:
        inside = np.ones(py.shape[0], dtype=bool)
    return OracleSet(px=px, py=py, pxt=px[inside], pyt=py[inside], max_gap=_max_gap(py))


def target_fraction(problem: Problem, n_samples: int, seed: int = 0, reference=None,
                    chunk: int = 1_000_000) -> float:
    """Monte-Carlo share of the design space whose image dominates the reference."""
    r = problem.reference if reference is None else np.asarray(reference, dtype=float)
    rng = np.random.default_rng(seed)
    hits, done = 0, 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        values = problem.evaluate(problem.domain.scale(rng.random((size, problem.d))))
        hits += int(np.count_nonzero(np.all(values <= r, axis=1) & np.any(values < r, axis=1)))
        done += size
    return hits / n_samples
