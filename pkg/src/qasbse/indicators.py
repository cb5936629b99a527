"""Pareto archives and quality indicators (HV, IGD, SP, NoP)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .instances import MAXIMIZE


class Solution(NamedTuple):
    assignment: tuple[int, ...]
    objectives: tuple[float, ...]


@dataclass(frozen=True)
class ParetoArchive:
    """Mutually non-dominated solutions with objective vectors in natural units."""

    solutions: tuple[Solution, ...]
    senses: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    @property
    def objectives(self) -> np.ndarray:
        if not self.solutions:
            return np.empty((0, len(self.senses)))
        return np.array([s.objectives for s in self.solutions], dtype=float)

    @property
    def points(self) -> set[tuple[float, ...]]:
        return {s.objectives for s in self.solutions}

    def to_json(self) -> dict:
        return {
            "senses": list(self.senses),
            "solutions": [{"assignment": list(s.assignment), "objectives": list(s.objectives)}
                          for s in self.solutions],
        }

    @classmethod
    def from_json(cls, d) -> "ParetoArchive":
        return cls(tuple(Solution(tuple(int(v) for v in s["assignment"]),
                                  tuple(float(v) for v in s["objectives"]))
                         for s in d["solutions"]),
                   tuple(d["senses"]))


def to_minimization(F, senses: Sequence[str]) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    sign = np.array([-1.0 if s == MAXIMIZE else 1.0 for s in senses])
    return F * sign


def pareto_filter(solutions: Iterable, senses: Sequence[str]) -> ParetoArchive:
    """Maximal mutually non-dominated subset.

    Solutions sharing an objective vector collapse to the one with the
    lexicographically smallest assignment, so the result does not depend on
    input order. Output is sorted by objective vector.
    """
    senses = tuple(senses)
    by_point: dict[tuple[float, ...], tuple[int, ...]] = {}
    for a, f in solutions:
        f = tuple(float(v) for v in f)
        if len(f) != len(senses):
            raise ValueError(f"objective vector {f} does not match {len(senses)} senses")
        a = tuple(int(v) for v in a)
        if f not in by_point or a < by_point[f]:
            by_point[f] = a
    if not by_point:
        return ParetoArchive((), senses)
    points = sorted(by_point)
    F = to_minimization(points, senses)
    order = np.lexsort(F.T[::-1])
    kept: list[int] = []
    kept_F = np.empty((0, F.shape[1]))
    for i in order:
        f = F[i]
        if len(kept) and np.any(np.all(kept_F <= f, axis=1) & np.any(kept_F < f, axis=1)):
            continue
        kept.append(int(i))
        kept_F = np.vstack([kept_F, f])
    chosen = sorted(points[i] for i in kept)
    return ParetoArchive(tuple(Solution(by_point[p], p) for p in chosen), senses)


def union_front(archives: Sequence[ParetoArchive]) -> ParetoArchive:
    if not archives:
        raise ValueError("need at least one archive")
    senses = archives[0].senses
    for a in archives[1:]:
        if a.senses != senses:
            raise ValueError(f"archives disagree on objective senses: {a.senses} vs {senses}")
    return pareto_filter((s for a in archives for s in a.solutions), senses)


# -- hypervolume ----------------------------------------------------------

def _hv_unit(P: np.ndarray) -> float:
    """Volume dominated by minimization points P inside [P, 1]^d.

    Slices along the last objective; the 2-D base case sweeps the running
    minimum so dominated points need no prior filtering.
    """
    if len(P) == 0:
        return 0.0
    d = P.shape[1]
    if d == 1:
        return float(1.0 - P[:, 0].min())
    if d == 2:
        P = P[np.lexsort((P[:, 1], P[:, 0]))]
        xs = np.append(P[1:, 0], 1.0)
        return float(np.sum((xs - P[:, 0]) * (1.0 - np.minimum.accumulate(P[:, 1]))))
    P = P[np.argsort(P[:, -1], kind="stable")]
    zs = np.append(P[1:, -1], 1.0)
    vol = 0.0
    for i in range(len(P)):
        depth = zs[i] - P[i, -1]
        if depth > 0.0:
            vol += depth * _hv_unit(P[: i + 1, :-1])
    return vol


def normalize(F, reference: np.ndarray) -> np.ndarray:
    """Scale minimization-form points by the reference front's ideal and nadir.

    Dimensions where the reference front has zero range use unit scale.
    """
    ideal, nadir = reference.min(axis=0), reference.max(axis=0)
    span = np.where(nadir > ideal, nadir - ideal, 1.0)
    return (np.asarray(F, dtype=float) - ideal) / span


def hv(archive: ParetoArchive, reference_front: ParetoArchive) -> float:
    """Normalized hypervolume against reference point (1, ..., 1).

    Normalized coordinates are clipped to [0, 1], so the value lies in [0, 1].
    """
    if len(archive) == 0:
        return 0.0
    if len(reference_front) == 0:
        raise ValueError("reference front is empty")
    if archive.objectives.shape[1] > 4:
        raise ValueError("hypervolume is supported for at most 4 objectives")
    ref = to_minimization(reference_front.objectives, reference_front.senses)
    P = np.clip(normalize(to_minimization(archive.objectives, archive.senses), ref), 0.0, 1.0)
    P = P[np.all(P < 1.0, axis=1)]
    return _hv_unit(P)


# -- distance indicators --------------------------------------------------

def _distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2))


def igd(archive: ParetoArchive, reference_front: ParetoArchive) -> float:
    """Mean distance from each reference point to its nearest archive point;
    ``inf`` for an empty archive."""
    if len(reference_front) == 0:
        raise ValueError("reference front is empty")
    if len(archive) == 0:
        return math.inf
    return float(_distances(reference_front.objectives, archive.objectives).min(axis=1).mean())


def spacing(archive: ParetoArchive) -> float:
    """Population standard deviation of nearest-neighbour distances; NaN for
    fewer than two solutions."""
    if len(archive) < 2:
        return math.nan
    D = _distances(archive.objectives, archive.objectives)
    np.fill_diagonal(D, np.inf)
    return float(D.min(axis=1).std())


def nop(method_archive: ParetoArchive, reference_front: ParetoArchive) -> int:
    """Number of the method's objective vectors present in the reference front."""
    if method_archive.senses != reference_front.senses:
        raise ValueError("archives disagree on objective senses")
    ref = reference_front.points
    return sum(1 for s in method_archive.solutions if s.objectives in ref)


@dataclass
class IndicatorReport:
    method: str
    time_s: float
    count: float
    nondominated_count: float
    igd: Optional[float]
    hv: Optional[float]
    sp: Optional[float]

    def row(self) -> dict:
        return {"method": self.method, "time_s": self.time_s, "S": self.count,
                "N_S": self.nondominated_count, "IGD": self.igd, "HV": self.hv, "SP": self.sp}


def _missing(v: float) -> Optional[float]:
    return None if v is None or not math.isfinite(v) else v


def indicator_report(method: str, archive: ParetoArchive, reference_front: ParetoArchive,
                     time_s: float = 0.0) -> IndicatorReport:
    """Indicator row for ``archive``; IGD and HV are missing when the
    reference front is empty."""
    empty_ref = len(reference_front) == 0
    return IndicatorReport(
        method=method,
        time_s=time_s,
        count=len(archive),
        nondominated_count=nop(archive, reference_front),
        igd=None if empty_ref else _missing(igd(archive, reference_front)),
        hv=None if empty_ref else hv(archive, reference_front),
        sp=_missing(spacing(archive)),
    )
