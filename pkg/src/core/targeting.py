"""
Preference machinery: simulated Pareto fronts, Ideal/Nadir and center
estimation, and the adaptation of the user reference point R into R-hat.
"""

from dataclasses import dataclass
from typing import List, NamedTuple

import numpy as np

from src.constants import N_SIM_POINTS, N_SIMS, REPAIR_RESOLUTION
from src.core.gp import MultiSurrogate, spawn_seeds
from src.core.pareto import (
    BoxDomain,
    BrokenLine,
    EmpiricalFront,
    closest_point_on_broken_line,
    dominated_by_any,
    dominates_any,
    extract_front,
    project_on_segment,
)
from src.core.search import lhs
from src.errors import EmptySetError, GeometryError


@dataclass
class SimulatedFronts:
    fronts: List[EmpiricalFront]
    sim_points: np.ndarray

    def __len__(self):
        return len(self.fronts)

    @property
    def ideals(self) -> np.ndarray:
        return np.array([f.points.min(axis=0) for f in self.fronts])

    @property
    def nadirs(self) -> np.ndarray:
        return np.array([f.points.max(axis=0) for f in self.fronts])


class FrontEstimates(NamedTuple):
    ideal_hat: np.ndarray
    nadir_hat: np.ndarray
    center_hat: np.ndarray


class ReferenceUpdate(NamedTuple):
    point: np.ndarray
    case: str
    arc_length: float
    repaired: bool


class CenterAnchor(NamedTuple):
    center: np.ndarray
    index: int
    crossing: bool


def simulate_fronts(models: MultiSurrogate, domain: BoxDomain, n_sims: int = N_SIMS,
                    n_points: int = N_SIM_POINTS, seed=0) -> SimulatedFronts:
    """
    Pareto fronts of joint posterior draws over a Latin hypercube augmented
    with every evaluated design.
    """
    base_seed, draw_seed = spawn_seeds(seed, 2)
    parts = [models.inputs]
    if n_points > 0:
        parts.insert(0, lhs(n_points, domain, base_seed))
    points = np.vstack(parts)
    draws = models.simulate(points, n_sims, draw_seed)
    fronts = [extract_front(draws[:, s, :].T, points) for s in range(n_sims)]
    return SimulatedFronts(fronts=fronts, sim_points=points)


def estimate_ideal_nadir(fronts: SimulatedFronts):
    """Componentwise medians of the simulated Ideals and Nadirs."""
    if len(fronts) == 0:
        raise EmptySetError("Need at least one simulated front")
    return np.median(fronts.ideals, axis=0), np.median(fronts.nadirs, axis=0)


def center_anchor(front: EmpiricalFront, ideal, nadir) -> CenterAnchor:
    """
    Center on the Ideal-Nadir segment together with the front point that fixes it.

    The segment is walked from the Ideal; the first point weakly dominated by a
    front point lies on the attainment staircase. When the segment never meets
    the staircase, the closest front point is projected onto the segment.
    """
    points = front.points if isinstance(front, EmpiricalFront) else np.atleast_2d(np.asarray(front, dtype=float))
    if points.size == 0:
        raise EmptySetError("Center estimation needs a nonempty front")
    ideal = np.asarray(ideal, dtype=float)
    nadir = np.asarray(nadir, dtype=float)
    direction = nadir - ideal
    if not np.any(direction != 0):
        raise GeometryError("Ideal and Nadir coincide", details=ideal)

    if np.all(direction >= 0):
        with np.errstate(divide='ignore', invalid='ignore'):
            ratios = np.where(direction > 0, (points - ideal) / np.where(direction > 0, direction, 1.0),
                              np.where(points <= ideal, -np.inf, np.inf))
        entry = ratios.max(axis=1)
        index = int(np.argmin(entry))
        t_star = float(entry[index])
        if 0.0 <= t_star <= 1.0:
            return CenterAnchor(ideal + t_star * direction, index, True)

    t, dist = project_on_segment(ideal, nadir, points)
    index = int(np.argmin(dist))
    return CenterAnchor(ideal + t[index] * direction, index, False)


def estimate_center(front: EmpiricalFront, ideal, nadir) -> np.ndarray:
    return center_anchor(front, ideal, nadir).center


def estimate_front(front: EmpiricalFront, fronts: SimulatedFronts) -> FrontEstimates:
    """Ideal, Nadir and center estimates; the center is NaN when Ideal and Nadir coincide."""
    ideal, nadir = estimate_ideal_nadir(fronts)
    try:
        center = estimate_center(front, ideal, nadir)
    except GeometryError:
        center = np.full(ideal.shape, np.nan)
    return FrontEstimates(ideal, nadir, center)


def _closest_on_range(line: BrokenLine, targets: np.ndarray, s_lo: float, s_hi: float):
    """Closest point to the targets on the part of the line with arc length in [s_lo, s_hi]."""
    if s_hi - s_lo <= 1e-15 * max(1.0, line.length):
        return line.point_at(s_lo), s_lo
    vertices = [line.point_at(s_lo)]
    for vertex, arc in zip(line.vertices, line.breakpoints):
        if s_lo < arc < s_hi:
            vertices.append(vertex)
    vertices.append(line.point_at(s_hi))
    sub = BrokenLine.through(*vertices)
    proj = closest_point_on_broken_line(sub, targets)
    return proj.point, s_lo + proj.arc_length


def adapt_reference_detailed(r, front: EmpiricalFront, ideal, nadir,
                             resolution: float = REPAIR_RESOLUTION) -> ReferenceUpdate:
    """
    Move R onto the broken line Ideal-R-Nadir, close to the empirical front.

    Cases: R dominates a front point (search segment R-Nadir), R is dominated
    by the front (segment Ideal-R), otherwise the whole broken line. A result
    dominated by the front is then slid toward the Ideal by bisection on arc
    length until it is non-dominated.
    """
    points = front.points
    if points.size == 0:
        raise EmptySetError("Reference adaptation needs a nonempty front")
    r = np.asarray(r, dtype=float)
    # the start of the line must never be dominated by the front
    ideal = np.minimum(np.asarray(ideal, dtype=float), points.min(axis=0))
    nadir = np.asarray(nadir, dtype=float)

    try:
        line = BrokenLine.through(ideal, r, nadir)
    except GeometryError:
        return ReferenceUpdate(r.copy(), 'degenerate', 0.0, False)

    s_r = float(np.linalg.norm(r - ideal))
    if dominates_any(r, points):
        case, (point, arc) = 'dominating', _closest_on_range(line, points, s_r, line.length)
    elif dominated_by_any(points, r):
        case, (point, arc) = 'dominated', _closest_on_range(line, points, 0.0, s_r)
    else:
        case, (point, arc) = 'nondominated', _closest_on_range(line, points, 0.0, line.length)

    if not dominated_by_any(points, point):
        return ReferenceUpdate(point, case, arc, False)

    lo, hi = 0.0, arc
    step = resolution * line.length
    while hi - lo > step:
        mid = 0.5 * (lo + hi)
        if dominated_by_any(points, line.point_at(mid)):
            hi = mid
        else:
            lo = mid
    return ReferenceUpdate(line.point_at(lo), case, lo, True)


def adapt_reference(r, front: EmpiricalFront, ideal, nadir) -> np.ndarray:
    return adapt_reference_detailed(r, front, ideal, nadir).point
