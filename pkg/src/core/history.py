"""
Run histories shared by the targeting loops, NSGA-II and the metrics.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from src.core.pareto import EmpiricalFront, extract_front

STATUS_RUNNING = 'running'
STATUS_CONVERGED = 'converged'
STATUS_BUDGET = 'budget-exhausted'
STATUS_ABORTED = 'aborted'
STATUS_STOPPED = 'stopped'


@dataclass
class EvaluationRecord:
    eval_index: int
    iteration: int  # 0 for the initial design
    x: np.ndarray
    y: np.ndarray
    rhat: Optional[np.ndarray] = None
    criterion_value: float = float('nan')
    line_uncertainty: float = float('nan')


@dataclass
class IterationRecord:
    iteration: int
    rhat: np.ndarray
    ideal_hat: np.ndarray
    nadir_hat: np.ndarray
    center_hat: np.ndarray
    criterion_value: float
    line_uncertainty: float = float('nan')
    n_evaluations: int = 0
    wallclock: float = 0.0
    fallback: bool = False
    reference_case: str = ''


@dataclass
class RunHistory:
    d: int
    m: int
    q: int = 1
    budget: Optional[int] = None
    n_initial: int = 0
    label: str = ''
    evaluations: List[EvaluationRecord] = field(default_factory=list)
    iterations: List[IterationRecord] = field(default_factory=list)
    status: str = STATUS_RUNNING
    converged_at: Optional[int] = None
    diagnostic: str = ''

    @property
    def n_evaluations(self) -> int:
        return len(self.evaluations)

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)

    @property
    def X(self) -> np.ndarray:
        if not self.evaluations:
            return np.zeros((0, self.d))
        return np.array([e.x for e in self.evaluations], dtype=float)

    @property
    def Y(self) -> np.ndarray:
        if not self.evaluations:
            return np.zeros((0, self.m))
        return np.array([e.y for e in self.evaluations], dtype=float)

    def add_evaluation(self, x, y, iteration: int, rhat=None, criterion_value: float = float('nan')) -> EvaluationRecord:
        record = EvaluationRecord(self.n_evaluations + 1, iteration, np.asarray(x, dtype=float),
                                  np.asarray(y, dtype=float),
                                  None if rhat is None else np.asarray(rhat, dtype=float), criterion_value)
        self.evaluations.append(record)
        return record

    def front(self, upto: Optional[int] = None) -> EmpiricalFront:
        """Empirical front of the first `upto` evaluations (all when None)."""
        n = self.n_evaluations if upto is None else min(upto, self.n_evaluations)
        return extract_front(self.Y[:n], self.X[:n])

    def truncated(self, n_evaluations: int) -> "RunHistory":
        """Copy restricted to the first n evaluations and the iterations they complete."""
        clone = RunHistory(self.d, self.m, self.q, self.budget, min(self.n_initial, n_evaluations), self.label,
                           self.evaluations[:n_evaluations],
                           [it for it in self.iterations if it.n_evaluations <= n_evaluations],
                           self.status, self.converged_at, self.diagnostic)
        return clone

    def to_frame(self) -> pd.DataFrame:
        """One row per evaluation; header stable for a given (d, m)."""
        rows = []
        for e in self.evaluations:
            row = {'eval_index': e.eval_index, 'iter': e.iteration}
            row.update({f"x{k + 1}": e.x[k] for k in range(self.d)})
            row.update({f"f{j + 1}": e.y[j] for j in range(self.m)})
            rhat = e.rhat if e.rhat is not None else np.full(self.m, np.nan)
            row.update({f"Rhat{j + 1}": rhat[j] for j in range(self.m)})
            row.update({'criterion_value': e.criterion_value, 'line_uncertainty': e.line_uncertainty,
                        'status': self.status})
            rows.append(row)
        return pd.DataFrame(rows, columns=history_columns(self.d, self.m))

    def iterations_frame(self) -> pd.DataFrame:
        columns = ['iter', 'n_evaluations', 'wallclock', 'criterion_value', 'line_uncertainty', 'fallback',
                   'reference_case']
        for name in ('Rhat', 'ideal', 'nadir', 'center'):
            columns += [f"{name}{j + 1}" for j in range(self.m)]
        rows = []
        for it in self.iterations:
            row = {'iter': it.iteration, 'n_evaluations': it.n_evaluations, 'wallclock': it.wallclock,
                   'criterion_value': it.criterion_value, 'line_uncertainty': it.line_uncertainty,
                   'fallback': it.fallback, 'reference_case': it.reference_case}
            for name, values in (('Rhat', it.rhat), ('ideal', it.ideal_hat), ('nadir', it.nadir_hat),
                                 ('center', it.center_hat)):
                row.update({f"{name}{j + 1}": values[j] for j in range(self.m)})
            rows.append(row)
        return pd.DataFrame(rows, columns=columns)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, q: int = 1) -> "RunHistory":
        d = sum(1 for c in frame.columns if c.startswith('x') and c[1:].isdigit())
        m = sum(1 for c in frame.columns if c.startswith('f') and c[1:].isdigit())
        xs = frame[[f"x{k + 1}" for k in range(d)]].to_numpy(dtype=float)
        ys = frame[[f"f{j + 1}" for j in range(m)]].to_numpy(dtype=float)
        rhats = frame[[f"Rhat{j + 1}" for j in range(m)]].to_numpy(dtype=float)
        iters = frame['iter'].to_numpy(dtype=int)
        history = cls(d=d, m=m, q=q, n_initial=int(np.count_nonzero(iters == 0)))
        for k in range(len(frame)):
            rhat = None if np.all(np.isnan(rhats[k])) else rhats[k]
            record = history.add_evaluation(xs[k], ys[k], int(iters[k]), rhat,
                                            float(frame['criterion_value'].iloc[k]))
            record.line_uncertainty = float(frame['line_uncertainty'].iloc[k])
        if len(frame):
            history.status = str(frame['status'].iloc[-1])
        return history


def history_columns(d: int, m: int) -> List[str]:
    return (['eval_index', 'iter'] + [f"x{k + 1}" for k in range(d)] + [f"f{j + 1}" for j in range(m)]
            + [f"Rhat{j + 1}" for j in range(m)] + ['criterion_value', 'line_uncertainty', 'status'])
