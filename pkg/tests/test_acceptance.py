"""Acceptance criteria 1-10.

Each test records one PASS/FAIL line (printed immediately and again in the
terminal summary by conftest) and then asserts, so a failing criterion also
fails the pytest run. Runtime bounds are part of each criterion.
"""
import math
import time

import numpy as np
import pytest

from oracles import (all_assignments, brute_front_points, feasible_mask, mc_hypervolume,
                     min_form, naive_igd, naive_nds, naive_nondominated, naive_spacing,
                     objective_values, random_instance, scaled_weighted)
from qasbse.baselines import (EpsilonConfig, Nsga2Config, fast_non_dominated_sort, nsga2,
                              run_epsilon_constraint, run_nsga2)
from qasbse.cqha import CqhaConfig, decompose, energy_impacts, run_cqha
from qasbse.indicators import (ParetoArchive, Solution, hv, igd, indicator_report, nop,
                               pareto_filter, spacing, union_front)
from qasbse.instances import build_nrp, generate_fm, generate_nrp
from qasbse.moqa import MoqaConfig, run_moqa
from qasbse.qubo import Qubo, compile_instance, complete_auxiliaries, random_weight
from qasbse.records import dump_json
from qasbse.samplers import SamplerSpec

RESULTS = []
EXACT = SamplerSpec(kind="exact")


def verdict(number, ok, elapsed, limit, detail=""):
    ok = bool(ok) and elapsed < limit
    line = (f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'}  "
            f"({elapsed:.1f}s of {limit:.0f}s)  {detail}").rstrip()
    RESULTS.append(line)
    print(line)
    assert ok, line


def raw_front(points, senses):
    rows = sorted(tuple(float(v) for v in p) for p in points)
    return ParetoArchive(tuple(Solution((i,), p) for i, p in enumerate(rows)), tuple(senses))


def small_instances():
    """Fixed set of instances with at most 16 variables (criteria 3 and 6)."""
    insts = [generate_nrp(8, 8, 0.2, seed=s, name=f"nrp16-{s}") for s in range(3)]
    insts += [generate_fm(n, 0.2, seed=s, name=f"fm{n}-{s}") for s, n in ((0, 12), (1, 14), (2, 16))]
    rng = np.random.default_rng(33)
    insts += [random_instance(rng, n, m=int(rng.integers(2, 4)), n_constraints=n // 2, name=f"rand{n}")
              for n in (10, 12, 14, 16)]
    return insts


# -- 1 ----------------------------------------------------------------------

def test_criterion_01_penalty_soundness():
    t0 = time.perf_counter()
    insts = [generate_nrp(7 - s % 3, 7, 0.2 + 0.02 * s, seed=s) for s in range(25)]
    insts += [generate_fm(8 + s % 7, 0.1 + 0.01 * s, seed=s) for s in range(25)]
    bad = []
    worst_margin = math.inf
    for k, inst in enumerate(insts):
        w = random_weight(len(inst.objectives), np.random.default_rng(1000 + k))
        q = compile_instance(inst, w)
        X = all_assignments(inst.n)
        E = q.energies(complete_auxiliaries(q, X))
        ok = feasible_mask(inst, X)
        target = scaled_weighted(inst, w, X)
        if not ok.any() or ok.all():
            bad.append(f"{inst.name}: needs feasible and infeasible assignments")
            continue
        if np.max(np.abs(E[ok] - target[ok])) > 1e-9:
            bad.append(f"{inst.name}: feasible energy differs from weighted objective")
        margin = E[~ok].min() - E[ok].max()
        worst_margin = min(worst_margin, margin)
        if margin <= 0:
            bad.append(f"{inst.name}: infeasible energy not above feasible maximum")
    verdict(1, not bad, time.perf_counter() - t0, 60,
            f"50 instances, min infeasible-feasible gap {worst_margin:.3f}; {bad[:3]}")


# -- 2 ----------------------------------------------------------------------

def test_criterion_02_epsilon_exact_front():
    t0 = time.perf_counter()
    insts = [generate_nrp(6 + s % 4, 6 + s % 3, 0.2, seed=s) for s in range(25)]
    rng = np.random.default_rng(2)
    insts += [random_instance(rng, 12 + s % 7, m=2, n_constraints=int(rng.integers(2, 10)), name=f"r{s}")
              for s in range(25)]
    assert max(i.n for i in insts) == 18
    bad = []
    for inst in insts:
        front = brute_front_points(inst)
        arch = run_epsilon_constraint(inst, EpsilonConfig()).archive
        rep = indicator_report("eps", arch, raw_front(front, inst.senses))
        if arch.points != front or rep.igd != 0.0 or rep.nondominated_count != len(front):
            bad.append(f"{inst.name}: |front|={len(front)} N_S={rep.nondominated_count} IGD={rep.igd}")
    verdict(2, not bad, time.perf_counter() - t0, 120, f"50 instances, n 12..18; {bad[:3]}")


# -- 3 ----------------------------------------------------------------------

def _weighted_optimum_vectors(inst, w):
    X = all_assignments(inst.n)
    X = X[feasible_mask(inst, X)]
    s = scaled_weighted(inst, w, X)
    best = X[s <= s.min() + 1e-9]
    return {tuple(map(float, f)) for f in objective_values(inst, best)}, float(s.min())


def test_criterion_03_moqa_oracle():
    t0 = time.perf_counter()
    bad = []
    for inst in small_instances():
        res = run_moqa(inst, MoqaConfig(n_weights=10, reads=10, sampler=EXACT, seed=3))
        arch = res.archive
        X = np.array([s.assignment for s in arch], dtype=np.int8)
        F = min_form(inst, arch.objectives)
        if not feasible_mask(inst, X).all():
            bad.append(f"{inst.name}: infeasible member")
        if not naive_nondominated(F).all():
            bad.append(f"{inst.name}: dominated member")
        if not arch.points <= brute_front_points(inst):
            bad.append(f"{inst.name}: member off the front")
        for wt in res.trace["weights"]:
            optima, _ = _weighted_optimum_vectors(inst, wt["weight"])
            if not optima <= arch.points:
                bad.append(f"{inst.name}: weighted optimum missing")
    verdict(3, not bad, time.perf_counter() - t0, 60, f"{len(small_instances())} instances; {bad[:3]}")


# -- 4 ----------------------------------------------------------------------

def test_criterion_04_moqa_coverage():
    t0 = time.perf_counter()
    insts = [generate_nrp(7, 7, 0.2, seed=4, name="nrp14"), generate_fm(14, 0.2, seed=4, name="fm14"),
             random_instance(np.random.default_rng(44), 14, m=2, n_constraints=6, name="rand14")]
    cover = {}
    for inst in insts:
        front = brute_front_points(inst)
        vals = []
        for seed in range(5):
            arch = run_moqa(inst, MoqaConfig(n_weights=20, reads=200, sampler=SamplerSpec(sweeps=1000),
                                             seed=seed)).archive
            vals.append(len(arch.points & front) / len(front))
        cover[inst.name] = float(np.mean(vals))
    detail = ", ".join(f"{k} {v:.0%}" for k, v in cover.items())
    verdict(4, all(v >= 0.5 for v in cover.values()), time.perf_counter() - t0, 300, detail)


# -- 5 ----------------------------------------------------------------------

def test_criterion_05_decomposer():
    t0 = time.perf_counter()
    bad = []
    rng = np.random.default_rng(5)
    for trial in range(100):
        n = int(rng.integers(1, 60))
        s = int(rng.integers(1, 20))
        quad = {(i, j): float(rng.normal()) for i in range(n) for j in range(i + 1, n)
                if rng.random() < rng.uniform(0, 0.3)}
        q = Qubo(n, rng.normal(size=n), quad)
        subs = decompose(q, 1.0, s)
        members = [v for sub in subs for v in sub.variables]
        if sorted(members) != list(range(n)) or any(len(x.variables) > s for x in subs):
            bad.append(f"trial {trial}: partition or size cap broken")
    ring = Qubo(12, rng.normal(size=12), {(i, (i + 1) % 12): float(rng.normal()) for i in range(12)})
    if [len(x.variables) for x in decompose(ring, 1.0, 6)] != [6, 6]:
        bad.append("12-variable ring with s=6 did not give two sub-QUBOs of 6")
    quad = {(2 * k, 2 * k + 1): float(rng.uniform(0.5, 5)) for k in range(10)}
    q = Qubo(20, rng.uniform(-1, 1, 20), quad)
    full = decompose(q, 1.0, 2)
    imp = energy_impacts(q)
    top = sorted(full, key=lambda x: -imp[list(x.variables)].sum())[:3]
    kept = decompose(q, 0.3, 2)
    if len(full) != 10 or {x.variables for x in kept} != {x.variables for x in top}:
        bad.append("rate 0.3 did not keep the top 3 of 10")
    verdict(5, not bad, time.perf_counter() - t0, 10, f"100 random QUBOs; {bad[:3]}")


# -- 6 ----------------------------------------------------------------------

def test_criterion_06_cqha_degenerate():
    t0 = time.perf_counter()
    bad = []
    runs = 0
    for inst in small_instances():
        m = run_moqa(inst, MoqaConfig(n_weights=5, reads=1, sampler=EXACT, seed=6))
        c = run_cqha(inst, CqhaConfig(n_weights=5, reads=1, sub_size=10_000, rate=1.0, max_loops=1,
                                      sampler=EXACT, seed=6))
        sa = run_cqha(inst, CqhaConfig(n_weights=3, reads=20, sub_size=4, max_loops=5,
                                       sampler=SamplerSpec(sweeps=100), seed=6))
        for wm, wc in zip(m.trace["weights"], c.trace["weights"]):
            _, opt = _weighted_optimum_vectors(inst, wc["weight"])
            if abs(wc["final_energy"] - wm["best_energy"]) > 1e-9 or abs(wc["final_energy"] - opt) > 1e-9:
                bad.append(f"{inst.name}: CQHA {wc['final_energy']} vs optimum {opt}")
        for res in (c, sa):
            runs += 1
            for wt in res.trace["weights"]:
                e = wt["energies"]
                if any(b > a for a, b in zip(e, e[1:])):
                    bad.append(f"{inst.name}: energy trace increases")
    verdict(6, not bad, time.perf_counter() - t0, 60, f"{runs} runs checked; {bad[:3]}")


# -- 7 ----------------------------------------------------------------------

def test_criterion_07_indicators():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_hv = worst_igd = worst_sp = 0.0
    bad = []
    for k in range(20):
        m = int(rng.integers(2, 5))
        P = rng.random((int(rng.integers(2, 15)), m))
        senses = ("minimize",) * m
        ref = raw_front(np.vstack([P, np.zeros((1, m)), np.ones((1, m))]), senses)
        worst_hv = max(worst_hv, abs(hv(raw_front(P, senses), ref) - mc_hypervolume(P, 1_000_000, seed=k)))
        A = rng.normal(size=(int(rng.integers(2, 25)), m))
        R = rng.normal(size=(int(rng.integers(1, 25)), m))
        worst_igd = max(worst_igd, abs(igd(raw_front(A, senses), raw_front(R, senses)) - naive_igd(R, A)))
        worst_sp = max(worst_sp, abs(spacing(raw_front(A, senses)) - naive_spacing(A)))
    for k in range(5):
        m = int(rng.integers(2, 5))
        F = rng.integers(0, 30, (500, m)).astype(float)
        got = pareto_filter([((i,), f) for i, f in enumerate(F)], ["minimize"] * m).points
        if got != {tuple(f) for f in F[naive_nondominated(F)]}:
            bad.append(f"pareto_filter set {k} differs")
    ok = worst_hv <= 1e-3 and worst_igd <= 1e-12 and worst_sp <= 1e-12 and not bad
    verdict(7, ok, time.perf_counter() - t0, 60,
            f"max |HV-MC| {worst_hv:.2e}, IGD {worst_igd:.1e}, SP {worst_sp:.1e}; {bad[:3]}")


# -- 8 ----------------------------------------------------------------------

def test_criterion_08_baseline_sanity():
    t0 = time.perf_counter()
    bad = []
    toys = [build_nrp("toy", [1, 2], [(3, [0]), (4, [1])], []),
            generate_nrp(2, 2, 0.5, seed=8, name="toy2"),
            random_instance(np.random.default_rng(8), 4, m=2, n_constraints=2, name="toy3")]
    for inst in toys:
        assert inst.n == 4
        front = brute_front_points(inst)
        for seed in range(10):
            a = nsga2(inst, Nsga2Config(population_size=8, max_evaluations=800, seed=seed))
            if not a.points <= front:
                bad.append(f"{inst.name} seed {seed}: off-front member")
    rng = np.random.default_rng(8)
    for k in range(5):
        F = rng.integers(0, 12, (200, int(rng.integers(2, 4)))).astype(float)
        if [set(f) for f in fast_non_dominated_sort(F)] != naive_nds(F):
            bad.append(f"sort set {k} differs")
    verdict(8, not bad, time.perf_counter() - t0, 30, f"3 toys x 10 seeds; {bad[:3]}")


# -- 9 ----------------------------------------------------------------------

def _duel(inst, run_qa, seeds, population):
    """QA method and NSGA-II with the QA method's measured wall time as budget."""
    rows = []
    for seed in seeds:
        qa = run_qa(inst, seed)
        budget = qa.timings["total"]
        ga = run_nsga2(inst, Nsga2Config(population_size=population, max_evaluations=10**12,
                                         time_budget=budget, seed=seed))
        front = union_front([qa.archive, ga.archive])
        rows.append({"seed": seed, "budget_s": round(budget, 2), "qa_S": len(qa.archive),
                     "qa_N_S": nop(qa.archive, front), "ga_S": len(ga.archive),
                     "ga_N_S": nop(ga.archive, front), "ga_evals": ga.trace["evaluations"]})
    return rows


@pytest.mark.slow
def test_criterion_09_trend():
    t0 = time.perf_counter()
    seeds = range(5)
    classic = generate_nrp(140, 100, 0.02, seed=1, name="classic1-like")
    large = generate_nrp(360, 240, 0.02, seed=2, name="nrp600")
    assert large.n == 600
    # NSGA-II population: 100 for the small-scale comparison, 500 for the large-scale one
    moqa_rows = _duel(classic, lambda inst, s: run_moqa(
        inst, MoqaConfig(n_weights=10, reads=500, sampler=SamplerSpec(sweeps=1000), seed=s)), seeds, 100)
    cqha_rows = _duel(large, lambda inst, s: run_cqha(
        inst, CqhaConfig(n_weights=10, reads=100, sampler=SamplerSpec(sweeps=1000), seed=s)), seeds, 500)
    wins, table = {}, []
    for label, rows in (("MOQA vs NSGA-II on classic1-like", moqa_rows),
                        ("CQHA vs NSGA-II on nrp600", cqha_rows)):
        table.append(f"  {label}")
        table.append("    " + "  ".join(rows[0]))
        table += ["    " + "  ".join(str(v) for v in r.values()) for r in rows]
        wins[label] = sum(r["qa_N_S"] >= r["ga_N_S"] for r in rows)
    print("\n".join(table))
    RESULTS.extend(table)
    detail = "; ".join(f"{k}: {v}/5 seeds" for k, v in wins.items())
    verdict(9, all(v >= 3 for v in wins.values()), time.perf_counter() - t0, 1800, detail)


# -- 10 ---------------------------------------------------------------------

def test_criterion_10_determinism():
    t0 = time.perf_counter()
    nrp = generate_nrp(20, 15, 0.1, seed=10)
    fm = generate_fm(40, 0.15, seed=10)
    runs = {
        "moqa": lambda inst: run_moqa(inst, MoqaConfig(n_weights=5, reads=50, sampler=SamplerSpec(sweeps=200),
                                                       seed=10)),
        "cqha": lambda inst: run_cqha(inst, CqhaConfig(n_weights=4, reads=20, sub_size=10,
                                                       sampler=SamplerSpec(sweeps=200), seed=10)),
        "nsga2": lambda inst: run_nsga2(inst, Nsga2Config(population_size=20, max_evaluations=2000, seed=10)),
        "eps": lambda inst: run_epsilon_constraint(inst, EpsilonConfig()),
    }
    differ = []
    for name, fn in runs.items():
        for inst in ((nrp, fm) if name != "eps" else (nrp,)):
            a = dump_json(fn(inst).archive.to_json())
            b = dump_json(fn(inst).archive.to_json())
            if a != b:
                differ.append(f"{name}/{inst.name}")
    verdict(10, not differ, time.perf_counter() - t0, 300, f"7 method/instance pairs; differ: {differ}")
