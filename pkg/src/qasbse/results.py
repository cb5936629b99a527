from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .indicators import ParetoArchive, pareto_filter
from .instances import ProblemInstance, evaluate_batch


@dataclass
class SolveResult:
    """Archive plus the per-method trace and per-phase timings of one run."""

    archive: ParetoArchive
    trace: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


class FeasiblePool:
    """Distinct feasible assignments collected across a run, keyed by bits."""

    def __init__(self, instance: ProblemInstance):
        self.instance = instance
        self._rows: dict[bytes, np.ndarray] = {}

    def add(self, X) -> int:
        """Add feasible rows of X (original variables only); return how many were feasible."""
        X = np.atleast_2d(np.asarray(X, dtype=np.int8))[:, : self.instance.n]
        if len(X) == 0:
            return 0
        _, viol = evaluate_batch(self.instance, X)
        ok = X[viol == 0]
        for row in ok:
            self._rows.setdefault(row.tobytes(), row.copy())
        return int(len(ok))

    def __len__(self) -> int:
        return len(self._rows)

    def archive(self) -> ParetoArchive:
        if not self._rows:
            return ParetoArchive((), self.instance.senses)
        X = np.array(list(self._rows.values()))
        objs, _ = evaluate_batch(self.instance, X)
        return pareto_filter(zip(X.tolist(), objs.tolist()), self.instance.senses)
