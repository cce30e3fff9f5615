"""
Comparison indicators computed from run histories.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from src.constants import RESTRICTED_W
from src.core.history import RunHistory
from src.core.pareto import EmpiricalFront, hypervolume
from src.core.problems import OracleSet
from src.core.targeting import estimate_center
from src.errors import ConfigError, DimensionError, EmptySetError


@dataclass
class MetricReport:
    label: str = ''
    seed: int = 0
    n_evaluations: int = 0
    time_to_target: Optional[int] = None
    hypervolume_at_R: float = 0.0
    restricted_hypervolume: float = 0.0
    n_dominating: int = 0
    dist_to_PXT: float = float('nan')
    dist_to_PX: float = float('nan')
    dist_to_PYT: float = float('nan')
    dist_to_PY: float = float('nan')
    oracle_gap: float = float('nan')
    restricted: Dict[str, float] = field(default_factory=dict)

    def to_row(self) -> dict:
        row = asdict(self)
        row.update({f"restricted_hypervolume_w{key}": value for key, value in row.pop('restricted').items()})
        return row


def _dominating_mask(ys: np.ndarray, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if ys.size == 0:
        return np.zeros(0, dtype=bool)
    return np.all(ys <= r, axis=1) & np.any(ys < r, axis=1)


def time_to_target(history: RunHistory, r) -> Optional[int]:
    """
    1-based count of post-DoE evaluations until one dominates r; None if none does.

    Returns 0 when the initial design already dominates r.
    """
    hits = np.flatnonzero(_dominating_mask(history.Y, r))
    if hits.size == 0:
        return None
    return max(0, int(hits[0]) + 1 - history.n_initial)


def count_dominating(history: RunHistory, r) -> int:
    return int(np.count_nonzero(_dominating_mask(history.Y, r)))


def restricted_reference(center, nadir, w: float) -> np.ndarray:
    if not 0 < w <= 1:
        raise ConfigError(f"Restriction weight must lie in (0, 1], got {w}")
    return (1.0 - w) * np.asarray(center, dtype=float) + w * np.asarray(nadir, dtype=float)


def restricted_hypervolume(front: EmpiricalFront, center, nadir, w: float) -> float:
    """Hypervolume of the front up to R_w = (1 - w) C + w N."""
    return hypervolume(front, restricted_reference(center, nadir, w))


def distance_to_set(points, reference_set, chunk: int = 4096) -> float:
    """Smallest Euclidean distance from any of the points to the reference sampling."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    reference_set = np.atleast_2d(np.asarray(reference_set, dtype=float))
    if points.size == 0 or reference_set.size == 0:
        raise EmptySetError("Distance needs two nonempty sets")
    if points.shape[1] != reference_set.shape[1]:
        raise DimensionError(f"Points live in dimension {points.shape[1]}, "
                             f"reference set in {reference_set.shape[1]}")
    best = np.inf
    for start in range(0, reference_set.shape[0], chunk):
        best = min(best, float(cdist(points, reference_set[start:start + chunk]).min()))
    return best


def expected_runtime(times: Sequence[Optional[int]]) -> float:
    """Mean successful time over the success rate; +inf without any success."""
    times = list(times)
    if not times:
        raise EmptySetError("Expected runtime needs at least one run")
    successes = [t for t in times if t is not None]
    if not successes:
        return float('inf')
    return float(np.mean(successes)) / (len(successes) / len(times))


def compute_report(history: RunHistory, reference, oracle: Optional[OracleSet] = None,
                   restricted_w: Iterable[float] = RESTRICTED_W, label: str = '', seed: int = 0) -> MetricReport:
    """
    All indicators for one history. The restricted hypervolume needs the true
    front center and Nadir, hence an oracle; distances need the oracle sets.
    """
    reference = np.asarray(reference, dtype=float)
    front = history.front()
    report = MetricReport(label=label, seed=seed, n_evaluations=history.n_evaluations,
                          time_to_target=time_to_target(history, reference),
                          hypervolume_at_R=hypervolume(front, reference),
                          n_dominating=count_dominating(history, reference))
    if oracle is None:
        return report
    true_front = EmpiricalFront(oracle.py)
    center = estimate_center(true_front, oracle.ideal, oracle.nadir)
    restricted_w = list(restricted_w)
    for w in restricted_w:
        report.restricted[f"{w:g}"] = restricted_hypervolume(front, center, oracle.nadir, w)
    if restricted_w:
        report.restricted_hypervolume = report.restricted[f"{restricted_w[0]:g}"]
    report.dist_to_PX = distance_to_set(history.X, oracle.px)
    report.dist_to_PY = distance_to_set(history.Y, oracle.py)
    if oracle.pxt.size:
        report.dist_to_PXT = distance_to_set(history.X, oracle.pxt)
        report.dist_to_PYT = distance_to_set(history.Y, oracle.pyt)
    report.oracle_gap = oracle.max_gap
    return report


def reports_frame(reports: List[MetricReport]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in reports])


def aggregate(per_seed: pd.DataFrame, metrics: Sequence[str]) -> pd.DataFrame:
    """
    One row per label: mean and std of every metric, the success count and the
    expected runtime. Time to target is averaged over successful runs only.
    """
    rows = []
    for label, group in per_seed.groupby('label', sort=False):
        row = {'label': label, 'n_runs': len(group)}
        for metric in metrics:
            if metric not in group:
                continue
            values = pd.to_numeric(group[metric], errors='coerce')
            if metric == 'time_to_target':
                times = [None if pd.isna(v) else int(v) for v in values]
                row['n_success'] = sum(t is not None for t in times)
                row['all_success'] = row['n_success'] == len(times)
                row['ert'] = expected_runtime(times)
                values = values.dropna()
            row[f"{metric}_mean"] = float(values.mean()) if len(values) else float('nan')
            row[f"{metric}_std"] = float(values.std(ddof=1)) if len(values) > 1 else 0.0 if len(values) else float('nan')
        rows.append(row)
    return pd.DataFrame(rows)


def format_table(summary: pd.DataFrame, metrics: Sequence[str]) -> pd.DataFrame:
    """Printable 'mean (std)' cells; time to target is marked x with its ERT when a run missed R."""
    rows = []
    for _, row in summary.iterrows():
        cells = {'label': row['label']}
        for metric in metrics:
            mean, std = row.get(f"{metric}_mean"), row.get(f"{metric}_std")
            if mean is None:
                continue
            cell = f"{mean:.3g} ({std:.2g})" if not pd.isna(mean) else "-"
            if metric == 'time_to_target' and not row.get('all_success', True):
                ert = row['ert']
                cell = f"× (ERT {ert:.3g})" if np.isfinite(ert) else "× (ERT inf)"
            cells[metric] = cell
        rows.append(cells)
    return pd.DataFrame(rows)
