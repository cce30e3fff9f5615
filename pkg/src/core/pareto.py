"""
Objective-space primitives: Pareto dominance, empirical fronts, hypervolume,
Ideal/Nadir points and the broken-line geometry used for targeting.

All objectives are minimized. Designs and objective vectors are plain numpy
arrays; the small dataclasses below only bundle arrays with their invariants.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from src.constants import HV_MC_SAMPLES
from src.errors import DimensionError, EmptySetError, GeometryError

ArrayLike = Union[np.ndarray, Sequence[float]]


@dataclass(frozen=True)
class BoxDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise DimensionError("Domain bounds must have the same length")
        if np.any(lower >= upper):
            raise GeometryError("Domain needs lower[i] < upper[i] for every i")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def unit(cls, d: int) -> "BoxDomain":
        return cls(np.zeros(d), np.ones(d))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x: ArrayLike, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def scale(self, unit_points: np.ndarray) -> np.ndarray:
        """Map points of [0,1]^d into the box."""
        return self.lower + unit_points * self.width


@dataclass
class EmpiricalFront:
    """Non-dominated objective vectors with the designs that produced them."""
    points: np.ndarray
    source_designs: Optional[np.ndarray] = None
    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.source_designs is not None:
            self.source_designs = np.atleast_2d(np.asarray(self.source_designs, dtype=float))

    def __len__(self):
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def ideal_nadir(self) -> Tuple[np.ndarray, np.ndarray]:
        return ideal_nadir(self)


class LineProjection(NamedTuple):
    point: np.ndarray
    arc_length: float
    distance: float


@dataclass(frozen=True)
class BrokenLine:
    """Polyline through 2 or 3 objective vectors, parameterized by arc length."""
    vertices: np.ndarray

    def __post_init__(self):
        vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if vertices.shape[0] < 2:
            raise GeometryError("A broken line needs at least two vertices")
        steps = np.linalg.norm(np.diff(vertices, axis=0), axis=1)
        if np.any(steps <= 0.0):
            raise GeometryError("Consecutive broken-line vertices must be distinct")
        object.__setattr__(self, 'vertices', vertices)

    @classmethod
    def through(cls, *vertices: ArrayLike) -> "BrokenLine":
        """Build a line dropping consecutive repeated vertices."""
        kept = []
        for vertex in vertices:
            vertex = np.asarray(vertex, dtype=float)
            if not kept or np.linalg.norm(vertex - kept[-1]) > 0.0:
                kept.append(vertex)
        if len(kept) < 2:
            raise GeometryError("Broken line collapses to a single point", details=kept[0])
        return cls(np.vstack(kept))

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)

    @property
    def breakpoints(self) -> np.ndarray:
        """Arc length at each vertex."""
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths)])

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def point_at(self, s: Union[float, np.ndarray]) -> np.ndarray:
        """Point(s) at arc length s, clamped to [0, length]."""
        s_arr = np.clip(np.atleast_1d(np.asarray(s, dtype=float)), 0.0, self.length)
        breaks = self.breakpoints
        seg = np.clip(np.searchsorted(breaks, s_arr, side='right') - 1, 0, len(self.segment_lengths) - 1)
        t = (s_arr - breaks[seg]) / self.segment_lengths[seg]
        points = self.vertices[seg] + t[:, None] * (self.vertices[seg + 1] - self.vertices[seg])
        return points[0] if np.ndim(s) == 0 else points


def _as_points(points) -> np.ndarray:
    if isinstance(points, EmpiricalFront):
        return points.points
    return np.atleast_2d(np.asarray(points, dtype=float))


def dominates(a: ArrayLike, b: ArrayLike) -> bool:
    """Strict Pareto dominance: a <= b everywhere and a < b somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"Cannot compare vectors of lengths {a.size} and {b.size}")
    return bool(np.all(a <= b) and np.any(a < b))


def weakly_dominates(a: ArrayLike, b: ArrayLike) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"Cannot compare vectors of lengths {a.size} and {b.size}")
    return bool(np.all(a <= b))


def dominated_by_any(points, y: ArrayLike) -> bool:
    """True when some row of `points` strictly dominates y."""
    pts = _as_points(points)
    y = np.asarray(y, dtype=float)
    if pts.size == 0:
        return False
    if pts.shape[1] != y.size:
        raise DimensionError(f"Front has {pts.shape[1]} objectives, vector has {y.size}")
    le = np.all(pts <= y, axis=1)
    lt = np.any(pts < y, axis=1)
    return bool(np.any(le & lt))


def dominates_any(y: ArrayLike, points) -> bool:
    """True when y strictly dominates some row of `points`."""
    pts = _as_points(points)
    y = np.asarray(y, dtype=float)
    if pts.size == 0:
        return False
    le = np.all(y <= pts, axis=1)
    lt = np.any(y < pts, axis=1)
    return bool(np.any(le & lt))


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Mask of rows not dominated by any other row; among duplicates only the first is kept."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, m = pts.shape
    if n == 0:
        return np.zeros(0, dtype=bool)
    if m == 2:
        order = np.lexsort((np.arange(n), pts[:, 1], pts[:, 0]))
        f2 = pts[order, 1]
        best_before = np.concatenate([[np.inf], np.minimum.accumulate(f2)[:-1]])
        mask = np.zeros(n, dtype=bool)
        mask[order[f2 < best_before]] = True
        return mask

    mask = np.ones(n, dtype=bool)
    chunk = max(1, 2_000_000 // max(n * m, 1))
    for start in range(0, n, chunk):
        block = pts[start:start + chunk]
        le = np.all(pts[None, :, :] <= block[:, None, :], axis=2)
        lt = np.any(pts[None, :, :] < block[:, None, :], axis=2)
        dominated = np.any(le & lt, axis=1)
        equal = np.all(pts[None, :, :] == block[:, None, :], axis=2)
        rows = np.arange(start, start + block.shape[0])
        earlier_duplicate = np.array([np.any(equal[k, :rows[k]]) for k in range(block.shape[0])])
        mask[start:start + block.shape[0]] = ~(dominated | earlier_duplicate)
    return mask


def extract_front(points, designs: Optional[np.ndarray] = None) -> EmpiricalFront:
    """
    Non-dominated subset of the given objective vectors, in input order.

    Args:
        points: (n, m) objective vectors
        designs: optional (n, d) designs that produced them

    Returns:
        EmpiricalFront with the kept rows and their input indices
    """
    pts = _as_points(points)
    if pts.size == 0:
        raise EmptySetError("Cannot extract a front from an empty set")
    mask = nondominated_mask(pts)
    keep = np.flatnonzero(mask)
    source = None
    if designs is not None:
        designs = np.atleast_2d(np.asarray(designs, dtype=float))
        if designs.shape[0] != pts.shape[0]:
            raise DimensionError("Designs and objective vectors must be parallel")
        source = designs[keep]
    return EmpiricalFront(points=pts[keep], source_designs=source, indices=keep)


def ideal_nadir(front) -> Tuple[np.ndarray, np.ndarray]:
    pts = _as_points(front)
    if pts.size == 0:
        raise EmptySetError("Ideal and Nadir need a nonempty front")
    return pts.min(axis=0), pts.max(axis=0)


def hypervolume(front, ref: ArrayLike, n_samples: int = HV_MC_SAMPLES, seed: int = 0) -> float:
    """
    Volume dominated by the front and bounded by `ref`.

    Exact sort-and-sweep for two objectives, Monte-Carlo in the box
    [Ideal, ref] otherwise. Points not strictly better than ref in every
    objective contribute nothing.
    """
    pts = _as_points(front)
    ref = np.asarray(ref, dtype=float)
    if pts.size == 0:
        return 0.0
    if pts.shape[1] != ref.size:
        raise DimensionError(f"Front has {pts.shape[1]} objectives, reference has {ref.size}")
    pts = pts[np.all(pts < ref, axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    pts = pts[nondominated_mask(pts)]

    if ref.size == 2:
        pts = pts[np.argsort(pts[:, 0], kind='stable')]
        next_f1 = np.append(pts[1:, 0], ref[0])
        return float(np.sum((next_f1 - pts[:, 0]) * (ref[1] - pts[:, 1])))

    lower = pts.min(axis=0)
    box = float(np.prod(ref - lower))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 100_000
    for start in range(0, n_samples, chunk):
        size = min(chunk, n_samples - start)
        samples = lower + rng.random((size, ref.size)) * (ref - lower)
        covered = np.zeros(size, dtype=bool)
        for p in pts:
            covered |= np.all(samples >= p, axis=1)
        hits += int(covered.sum())
    return box * hits / n_samples


def project_on_segment(a: np.ndarray, b: np.ndarray, targets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Clamped projection parameters t in [0,1] and distances of each target to segment [a, b]."""
    direction = b - a
    denom = float(direction @ direction)
    if denom <= 0.0:
        raise GeometryError("Segment endpoints coincide")
    t = np.clip((targets - a) @ direction / denom, 0.0, 1.0)
    closest = a + t[:, None] * direction
    return t, np.linalg.norm(targets - closest, axis=1)


def closest_point_on_broken_line(line: BrokenLine, targets) -> LineProjection:
    """
    Point of the broken line closest (Euclidean) to the target set.

    Each segment is projected on analytically against every target; ties in
    distance go to the smaller arc length, i.e. toward the first vertex.
    """
    pts = _as_points(targets)
    if pts.size == 0:
        raise EmptySetError("Need at least one target point")
    breaks = line.breakpoints
    lengths = line.segment_lengths
    best_arc, best_dist = np.inf, np.inf
    for seg in range(len(lengths)):
        t, dist = project_on_segment(line.vertices[seg], line.vertices[seg + 1], pts)
        arcs = breaks[seg] + t * lengths[seg]
        tol = 1e-12 * max(1.0, line.length)
        for arc, d in zip(arcs, dist):
            if d < best_dist - tol or (abs(d - best_dist) <= tol and arc < best_arc):
                best_arc, best_dist = float(arc), float(d)
    return LineProjection(point=line.point_at(best_arc), arc_length=best_arc, distance=best_dist)
