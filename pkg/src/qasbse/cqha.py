"""Decompose-solve-compose annealing for instances too large to sample whole.

Per weight vector: compile the QUBO, split it into sub-QUBOs of at most ``s``
variables grown around high energy-impact variables, then repeatedly solve
each sub-QUBO with the rest of the incumbent held fixed, keep compositions
that lower the full energy, and polish with steepest descent.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .indicators import ParetoArchive
from .instances import ProblemInstance
from .moqa import weight_stream
from .qubo import (Qubo, QuboBuildConfig, clamp_to, complete_auxiliaries, model_to_qubo,
                   random_weight, scale_objectives)
from .results import FeasiblePool, SolveResult
from .samplers import SamplerCapabilityError, SamplerSpec, sample, steepest_descent

IMPACT_STRATEGIES = ("total", "linear")


@dataclass(frozen=True)
class SubQubo:
    variables: tuple[int, ...]
    impact: float

    def clamped(self, q: Qubo, incumbent: np.ndarray) -> Qubo:
        """Sub-QUBO over ``variables`` with every other variable fixed to the
        incumbent. A sub-QUBO covering all variables is ``q`` itself, so its
        auxiliary registry survives for the exact sampler."""
        if self.variables == tuple(range(q.n_total)):
            return q
        return clamp_to(q, incumbent, self.variables)


@dataclass(frozen=True)
class CqhaConfig:
    n_weights: int = 10
    reads: int = 100
    sub_size: int = 150
    rate: float = 1.0
    max_loops: int = 10
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    build: QuboBuildConfig = field(default_factory=QuboBuildConfig)
    seed: int = 0
    impact: str = "total"
    time_budget: Optional[float] = None  # seconds; no new weight starts after it

    def __post_init__(self):
        if self.n_weights < 1 or self.reads < 1:
            raise ValueError("n_weights and reads must be >= 1")
        if self.sub_size < 2:
            raise ValueError("sub_size must be >= 2")
        if not 0.0 < self.rate <= 1.0:
            raise ValueError("rate must lie in (0, 1]")
        if self.max_loops < 1:
            raise ValueError("max_loops must be >= 1")
        if self.impact not in IMPACT_STRATEGIES:
            raise ValueError(f"impact must be one of {IMPACT_STRATEGIES}")


def energy_impacts(q: Qubo, strategy: str = "total") -> np.ndarray:
    """Per-variable impact: ``|linear_i|`` plus, for ``total``, the incident ``|q_ij|``."""
    imp = np.abs(q.linear)
    if strategy == "total":
        imp = imp.copy()
        np.add.at(imp, q.qi, np.abs(q.qv))
        np.add.at(imp, q.qj, np.abs(q.qv))
    elif strategy != "linear":
        raise ValueError(f"unknown impact strategy {strategy!r}")
    return imp


def energy_impact(q: Qubo, i: int, strategy: str = "total") -> float:
    if not 0 <= i < q.n_total:
        raise IndexError(f"variable {i} outside 0..{q.n_total - 1}")
    return float(energy_impacts(q, strategy)[i])


def _best(candidates, impacts: np.ndarray) -> int:
    return min(candidates, key=lambda v: (-impacts[v], v))


def decompose(q: Qubo, rate: float = 1.0, s: int = 150, strategy: str = "total") -> list[SubQubo]:
    """Greedy max-energy-impact decomposition.

    Each sub-QUBO is seeded with the highest-impact unselected variable and
    grown along quadratic edges: first from the most recently added variable,
    falling back to any member when that one has no unselected neighbour.
    Growth stops at ``s`` variables or when the sub-QUBO has no unselected
    neighbours. Members are stored in ascending index order. The
    ``ceil(count * rate)`` sub-QUBOs with the largest summed impact are
    returned, highest first.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must lie in (0, 1]")
    impacts = energy_impacts(q, strategy)
    indptr, indices, _ = q.adjacency
    selected = np.zeros(q.n_total, dtype=bool)
    subs: list[SubQubo] = []
    order = sorted(range(q.n_total), key=lambda v: (-impacts[v], v))
    cursor = 0
    while True:
        while cursor < len(order) and selected[order[cursor]]:
            cursor += 1
        if cursor == len(order):
            break
        p = order[cursor]
        members = [p]
        selected[p] = True
        frontier: set[int] = set()  # unselected neighbours of any member
        while len(members) < s:
            nbrs = indices[indptr[p]:indptr[p + 1]]
            frontier.update(int(v) for v in nbrs if not selected[v])
            frontier.discard(p)
            local = [int(v) for v in nbrs if not selected[v]]
            if local:
                p = _best(local, impacts)
            elif frontier:
                p = _best(frontier, impacts)
            else:
                break
            frontier.discard(p)
            members.append(p)
            selected[p] = True
        subs.append(SubQubo(tuple(sorted(members)), float(impacts[members].sum())))
    num = math.ceil(len(subs) * rate - 1e-12)
    ranked = sorted(range(len(subs)), key=lambda i: (-subs[i].impact, i))
    return [subs[i] for i in ranked[:num]]


def compose(incumbent: Sequence[int], variables: Sequence[int], values: Sequence[int]) -> np.ndarray:
    """Copy of ``incumbent`` with ``variables`` overwritten by ``values``."""
    out = np.array(incumbent, dtype=np.int8)
    variables = np.asarray(variables, dtype=np.int64)
    if len(variables) != len(values):
        raise ValueError("variables and values differ in length")
    if len(variables) and (variables.min() < 0 or variables.max() >= len(out)):
        raise IndexError("sub-assignment references a variable outside the incumbent")
    out[variables] = np.asarray(values, dtype=np.int8)
    return out


def _solve_weight(instance, scaled, k, cfg, pool, timings) -> dict:
    rng = weight_stream(cfg.seed, k)
    w = random_weight(len(scaled), rng)
    tc = time.perf_counter()
    q = model_to_qubo(scaled, w, instance.constraints, cfg.build)
    timings["compile"] += time.perf_counter() - tc
    x = complete_auxiliaries(q, rng.integers(0, 2, q.origin_n))
    energy = q.energy(x)
    energies = [energy]
    s = cfg.sub_size
    td = time.perf_counter()
    subs = decompose(q, cfg.rate, s, cfg.impact)
    timings["decompose"] += time.perf_counter() - td
    spec = replace(cfg.sampler, reads=cfg.reads)
    passes = []
    loop = 0
    while loop < cfg.max_loops:
        accepted = 0
        try:
            for j, sub in enumerate(subs):
                ts = time.perf_counter()
                samples = sample(sub.clamped(q, x), spec.derive(k, loop, j))
                timings["sample"] += time.perf_counter() - ts
                cand = compose(x, sub.variables, samples[0].assignment)
                e = q.energy(cand)
                if e < energy:
                    x, energy = cand, e
                    energies.append(energy)
                    accepted += 1
                    pool.add(x)
        except SamplerCapabilityError:
            if s // 2 < 2:
                raise
            s //= 2
            td = time.perf_counter()
            subs = decompose(q, cfg.rate, s, cfg.impact)
            timings["decompose"] += time.perf_counter() - td
            continue
        tl = time.perf_counter()
        polished = steepest_descent(q, x)
        timings["local"] += time.perf_counter() - tl
        moved = polished.energy < energy
        if moved:
            x, energy = polished.assignment, polished.energy
            energies.append(energy)
        pool.add(x)
        passes.append({"subqubos_solved": len(subs), "accepted": accepted, "descent_moved": moved})
        loop += 1
        if accepted == 0 and not moved:
            break
    return {
        "weight": w.tolist(),
        "qubo_variables": q.n_total,
        "sub_size": s,
        "decomposition_sizes": [len(sq.variables) for sq in subs],
        "passes": passes,
        "energies": energies,
        "final_energy": energy,
    }


def run_cqha(instance: ProblemInstance, cfg: CqhaConfig) -> SolveResult:
    t0 = time.perf_counter()
    scaled = scale_objectives(instance)
    pool = FeasiblePool(instance)
    timings = {"compile": 0.0, "decompose": 0.0, "sample": 0.0, "local": 0.0, "sort": 0.0}
    per_weight = []
    for k in range(cfg.n_weights):
        if k and cfg.time_budget is not None and time.perf_counter() - t0 >= cfg.time_budget:
            break
        per_weight.append(_solve_weight(instance, scaled, k, cfg, pool, timings))
    ts = time.perf_counter()
    archive = pool.archive()
    timings["sort"] = time.perf_counter() - ts
    timings["total"] = time.perf_counter() - t0
    return SolveResult(archive, {"weights": per_weight, "pool_size": len(pool)}, timings)


def cqha(instance: ProblemInstance, cfg: CqhaConfig) -> ParetoArchive:
    return run_cqha(instance, cfg).archive
