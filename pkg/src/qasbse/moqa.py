"""Multi-objective annealing for instances small enough to sample whole.

For each of ``n_weights`` random weight vectors the instance is compiled to a
QUBO and sampled ``reads`` times; feasible samples from every weight are pooled
and reduced to their non-dominated subset.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .indicators import ParetoArchive
from .instances import ProblemInstance
from .qubo import QuboBuildConfig, model_to_qubo, random_weight, scale_objectives
from .results import FeasiblePool, SolveResult
from .samplers import SamplerSpec, sample


@dataclass(frozen=True)
class MoqaConfig:
    n_weights: int = 10
    reads: int = 500
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    build: QuboBuildConfig = field(default_factory=QuboBuildConfig)
    seed: int = 0
    time_budget: Optional[float] = None  # seconds; no new weight starts after it

    def __post_init__(self):
        if self.n_weights < 1:
            raise ValueError("n_weights must be >= 1")
        if self.reads < 1:
            raise ValueError("reads must be >= 1")


def weight_stream(seed: int, k: int) -> np.random.Generator:
    """Random stream for weight iteration ``k``; shared by MOQA and CQHA."""
    return np.random.default_rng([int(seed), int(k)])


def run_moqa(instance: ProblemInstance, cfg: MoqaConfig) -> SolveResult:
    t0 = time.perf_counter()
    scaled = scale_objectives(instance)
    m = len(instance.objectives)
    pool = FeasiblePool(instance)
    timings = {"compile": 0.0, "sample": 0.0, "sort": 0.0}
    per_weight = []
    for k in range(cfg.n_weights):
        if k and cfg.time_budget is not None and time.perf_counter() - t0 >= cfg.time_budget:
            break
        tc = time.perf_counter()
        w = random_weight(m, weight_stream(cfg.seed, k))
        q = model_to_qubo(scaled, w, instance.constraints, cfg.build)
        ts = time.perf_counter()
        spec = replace(cfg.sampler, reads=cfg.reads).derive(k)
        samples = sample(q, spec)
        te = time.perf_counter()
        X = np.array([s.assignment[: q.origin_n] for s in samples], dtype=np.int8)
        n_feasible = pool.add(X)
        timings["compile"] += ts - tc
        timings["sample"] += te - ts
        per_weight.append({
            "weight": w.tolist(),
            "samples": int(sum(s.occurrences for s in samples)),
            "distinct": len(samples),
            "feasible_distinct": n_feasible,
            "best_energy": samples[0].energy,
            "qubo_variables": q.n_total,
        })
    ts = time.perf_counter()
    archive = pool.archive()
    timings["sort"] = time.perf_counter() - ts
    timings["total"] = time.perf_counter() - t0
    trace = {"weights": per_weight, "samples_total": sum(p["samples"] for p in per_weight),
             "pool_size": len(pool)}
    return SolveResult(archive, trace, timings)


def moqa(instance: ProblemInstance, cfg: MoqaConfig) -> ParetoArchive:
    return run_moqa(instance, cfg).archive
