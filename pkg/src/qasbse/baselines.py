"""Comparison methods: binary NSGA-II and the bi-objective epsilon-constraint
method on top of an exact branch-and-bound."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._search import BinarySearch, SearchLimitExceeded
from .indicators import ParetoArchive, pareto_filter, to_minimization
from .instances import MAXIMIZE, Constraint, ProblemInstance, evaluate_batch
from .results import SolveResult


class ResourceLimitError(RuntimeError):
    """The exact solver ran out of its node or time budget."""


# -- NSGA-II building blocks ----------------------------------------------

def _dominance_matrix(F: np.ndarray) -> np.ndarray:
    """D[i, j] is True when point i dominates point j (minimization)."""
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


def fast_non_dominated_sort(points, senses: Optional[Sequence[str]] = None) -> list[list[int]]:
    """Partition point indices into successive non-dominated fronts."""
    F = np.asarray(points, dtype=float)
    if F.size == 0:
        return []
    if senses is not None:
        F = to_minimization(F, senses)
    D = _dominance_matrix(F)
    counts = D.sum(axis=0)
    remaining = np.ones(len(F), dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (counts == 0))
        fronts.append(front.tolist())
        remaining[front] = False
        counts = counts - D[front].sum(axis=0)
    return fronts


def crowding_distance(front) -> np.ndarray:
    """Crowding distance per member; boundary members are infinite and an
    objective with zero range contributes nothing to interior members."""
    F = np.asarray(front, dtype=float)
    k, m = F.shape
    dist = np.zeros(k)
    if k <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        vals = F[order, j]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span > 0:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


@dataclass(frozen=True)
class Nsga2Config:
    population_size: int = 100
    max_evaluations: int = 20000
    crossover_prob: float = 0.8
    mutation_prob: Optional[float] = None  # default 1/n
    seed: int = 0
    crossover: str = "uniform"
    time_budget: Optional[float] = None

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError("population_size must be even and >= 4")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must lie in [0, 1]")
        if self.crossover not in ("uniform", "single_point"):
            raise ValueError("crossover must be 'uniform' or 'single_point'")


def _rank_and_crowd(F: np.ndarray, viol: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[list[int]]]:
    """Constrained ranking: feasible fronts first, then one level per distinct
    violation total in increasing order."""
    n = len(F)
    rank = np.zeros(n, dtype=np.int64)
    crowd = np.zeros(n)
    feas = np.flatnonzero(viol == 0)
    fronts: list[list[int]] = []
    for front in fast_non_dominated_sort(F[feas]):
        fronts.append(feas[front].tolist())
    for v in np.unique(viol[viol > 0]):
        fronts.append(np.flatnonzero(viol == v).tolist())
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance(F[front])
    return rank, crowd, fronts


def _survive(F: np.ndarray, viol: np.ndarray, size: int) -> np.ndarray:
    _, crowd, fronts = _rank_and_crowd(F, viol)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= size:
            chosen.extend(front)
            continue
        front = np.asarray(front)
        order = np.argsort(-crowd[front], kind="stable")
        chosen.extend(front[order[: size - len(chosen)]].tolist())
        break
    return np.asarray(chosen, dtype=np.int64)


def _tournament(rng, viol, rank, crowd, count: int) -> np.ndarray:
    a = rng.integers(0, len(viol), count)
    b = rng.integers(0, len(viol), count)
    # lexicographic key: fewer violations, lower rank, larger crowding
    a_wins = (viol[a] < viol[b]) | (
        (viol[a] == viol[b]) & ((rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))))
    return np.where(a_wins, a, b)


def _minimization_objectives(instance: ProblemInstance, X: np.ndarray):
    objs, viol = evaluate_batch(instance, X)
    return to_minimization(objs, instance.senses), viol


def run_nsga2(instance: ProblemInstance, cfg: Nsga2Config) -> SolveResult:
    """Binary NSGA-II with constrained tournament and survival.

    Offspring that duplicate an individual already in the merged pool are
    dropped before survival, so without variation the population is unchanged.
    """
    t0 = time.perf_counter()
    deadline = None if cfg.time_budget is None else t0 + cfg.time_budget
    rng = np.random.default_rng(cfg.seed)
    n, N = instance.n, cfg.population_size
    pm = 1.0 / n if cfg.mutation_prob is None else cfg.mutation_prob
    P = rng.integers(0, 2, (N, n)).astype(np.int8)
    initial = P.copy()
    F, V = _minimization_objectives(instance, P)
    evals, generations = N, 0
    history = []
    while evals + N <= cfg.max_evaluations:
        if deadline is not None and time.perf_counter() >= deadline:
            break
        rank, crowd, _ = _rank_and_crowd(F, V)
        parents = P[_tournament(rng, V, rank, crowd, N)]
        kids = parents.copy()
        for i in range(0, N, 2):
            if rng.random() < cfg.crossover_prob:
                p1, p2 = parents[i], parents[i + 1]
                if cfg.crossover == "uniform":
                    mask = rng.random(n) < 0.5
                else:
                    mask = np.arange(n) < rng.integers(1, n) if n > 1 else np.ones(n, dtype=bool)
                kids[i] = np.where(mask, p1, p2)
                kids[i + 1] = np.where(mask, p2, p1)
        if pm > 0:
            kids ^= (rng.random(kids.shape) < pm).astype(np.int8)
        evals += N
        generations += 1
        seen = {row.tobytes() for row in P}
        fresh = []
        for row in kids:
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                fresh.append(row)
        if fresh:
            K = np.array(fresh, dtype=np.int8)
            KF, KV = _minimization_objectives(instance, K)
            P2, F2, V2 = np.vstack([P, K]), np.vstack([F, KF]), np.concatenate([V, KV])
            keep = _survive(F2, V2, N)
            P, F, V = P2[keep], F2[keep], V2[keep]
        history.append(int((V == 0).sum()))
    feas = np.flatnonzero(V == 0)
    objs, _ = evaluate_batch(instance, P[feas])
    if len(feas):
        first = fast_non_dominated_sort(F[feas])[0]
        archive = pareto_filter(zip(P[feas][first].tolist(), objs[first].tolist()), instance.senses)
    else:
        archive = ParetoArchive((), instance.senses)
    trace = {"evaluations": evals, "generations": generations, "feasible_per_generation": history,
             "initial_population": initial.tolist(), "final_population": P.tolist()}
    return SolveResult(archive, trace, {"total": time.perf_counter() - t0})


def nsga2(instance: ProblemInstance, cfg: Nsga2Config) -> ParetoArchive:
    return run_nsga2(instance, cfg).archive


# -- exact methods --------------------------------------------------------

def exact_minimize(objective: Sequence[float], constraints: Sequence[Constraint],
                   bound: Optional[tuple[Sequence[float], str, float]] = None,
                   node_limit: Optional[int] = 5_000_000,
                   deadline: Optional[float] = None) -> tuple[Optional[np.ndarray], float]:
    """Provably optimal ``argmin objective @ x`` over feasible binary x.

    ``bound`` is an optional side constraint ``(coefficients, op, rhs)`` with
    ``op`` in ``{"<=", ">="}``. Returns ``(None, inf)`` when infeasible and
    raises :class:`ResourceLimitError` rather than returning a suboptimal point.
    """
    n = len(objective)
    clauses = []
    for c in constraints:
        if any(not 0 <= v < n for v in c.vars):
            raise ValueError(f"{c.kind} references a variable outside 0..{n - 1}")
        clauses.extend(c.to_clauses())
    if bound is not None and len(bound[0]) != n:
        raise ValueError("bound coefficients must match the objective length")
    search = BinarySearch(n, clauses, objective, bound, node_limit=node_limit, deadline=deadline)
    try:
        return search.solve()
    except SearchLimitExceeded as exc:
        raise ResourceLimitError(str(exc)) from exc


@dataclass(frozen=True)
class EpsilonConfig:
    optimized: int = 0
    constrained: int = 1
    step: Optional[float] = None  # default 1 for integer-valued objectives
    node_limit: Optional[int] = 5_000_000
    time_budget: Optional[float] = None

    def __post_init__(self):
        if self.optimized == self.constrained:
            raise ValueError("optimized and constrained objectives must differ")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")


def run_epsilon_constraint(instance: ProblemInstance, cfg: EpsilonConfig) -> SolveResult:
    """Enumerate the Pareto front of a bi-objective instance.

    Each round minimizes the optimized objective with the constrained one held
    at least ``step`` better than the previous point, then minimizes the
    constrained objective at that optimum so only efficient points are kept.
    """
    t0 = time.perf_counter()
    if len(instance.objectives) != 2:
        raise ValueError(f"epsilon-constraint needs exactly 2 objectives, got {len(instance.objectives)}")
    if {cfg.optimized, cfg.constrained} != {0, 1}:
        raise ValueError("objective roles must be 0 and 1")
    deadline = None if cfg.time_budget is None else time.monotonic() + cfg.time_budget

    def min_form(j):
        o = instance.objectives[j]
        c = np.asarray(o.coefficients, dtype=float)
        return -c if o.sense == MAXIMIZE else c

    c1, c2 = min_form(cfg.optimized), min_form(cfg.constrained)
    step = cfg.step
    if step is None:
        if not np.all(np.equal(np.mod(c2, 1.0), 0.0)):
            raise ValueError("constrained objective is not integer-valued; pass an explicit step")
        step = 1.0

    def solve(obj, bound):
        return exact_minimize(obj, instance.constraints, bound, cfg.node_limit, deadline)

    found = []
    eps = None
    while True:
        x, f1 = solve(c1, None if eps is None else (c2, "<=", eps))
        if x is None:
            break
        x, f2 = solve(c2, (c1, "<=", f1))
        found.append(x)
        eps = f2 - step
    X = np.array(found, dtype=np.int8).reshape(len(found), instance.n)
    objs, _ = evaluate_batch(instance, X)
    archive = pareto_filter(zip(X.tolist(), objs.tolist()), instance.senses)
    return SolveResult(archive, {"iterations": len(found)}, {"total": time.perf_counter() - t0})


def epsilon_constraint(instance: ProblemInstance, cfg: EpsilonConfig = EpsilonConfig()) -> ParetoArchive:
    return run_epsilon_constraint(instance, cfg).archive
