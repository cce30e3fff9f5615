"""
Local-convergence detection: probability that a simulated front attains an
objective vector, integrated as p(1 - p) along the Ideal-R-Nadir line.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from src.constants import EPSILON_RELATIVE, N_QUAD
from src.core.pareto import BrokenLine
from src.core.targeting import SimulatedFronts
from src.errors import ConfigError, EmptySetError


@dataclass
class UncertaintyReport:
    value: float
    n_line_points: int
    per_point_p: np.ndarray
    line_length: float = 0.0


def domination_probabilities(fronts: SimulatedFronts, ys: np.ndarray) -> np.ndarray:
    """p(y) for every row of ys: share of fronts with a point weakly dominating y."""
    if len(fronts) == 0:
        raise EmptySetError("Need at least one simulated front")
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    hits = np.zeros(ys.shape[0])
    for front in fronts.fronts:
        attained = np.all(front.points[None, :, :] <= ys[:, None, :], axis=2)
        hits += np.any(attained, axis=1)
    return hits / len(fronts)


def domination_probability(fronts: SimulatedFronts, y) -> float:
    return float(domination_probabilities(fronts, y)[0])


def line_uncertainty(fronts: SimulatedFronts, line: BrokenLine, n_quad: int = N_QUAD) -> UncertaintyReport:
    """Trapezoidal arc-length integral of p(1 - p) at n_quad equally spaced line points."""
    n_quad = max(2, int(n_quad))
    arcs = np.linspace(0.0, line.length, n_quad)
    p = domination_probabilities(fronts, line.point_at(arcs))
    value = float(trapezoid(p * (1.0 - p), arcs))
    return UncertaintyReport(value=max(value, 0.0), n_line_points=n_quad, per_point_p=p,
                             line_length=line.length)


def default_epsilon(line: BrokenLine, relative: float = EPSILON_RELATIVE) -> float:
    return relative * line.length


def converged(report: UncertaintyReport, epsilon: float) -> bool:
    if epsilon <= 0:
        raise ConfigError(f"Convergence threshold must be positive, got {epsilon}")
    return report.value <= epsilon
