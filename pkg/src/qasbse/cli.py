"""Command-line harness: ``gen``, ``solve``, ``report`` and ``bench``.

Exit codes: 0 success, 1 usage error (bad arguments, incompatible
method/instance, mismatched records), 2 runtime error (I/O, parsing, solver
failures).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from . import config as config_mod
from .baselines import run_epsilon_constraint, run_nsga2
from .cqha import run_cqha
from .indicators import ParetoArchive, indicator_report, union_front
from .instances import (ProblemInstance, generate_fm, generate_nrp, parse_classic_nrp,
                        parse_dimacs_fm, serialize_classic_nrp, serialize_dimacs_fm)
from .moqa import run_moqa
from .records import SCHEMA, RunRecord, dump_json, instance_hash, write_atomic

log = logging.getLogger("qasbse")

METHODS = ("moqa", "cqha", "nsga2", "eps")
_RUNNERS = {"moqa": run_moqa, "cqha": run_cqha, "nsga2": run_nsga2, "eps": run_epsilon_constraint}
REPORT_COLUMNS = ("method", "time_s", "S", "N_S", "IGD", "HV", "SP")


class UsageError(Exception):
    """Bad invocation; maps to exit code 1."""


# -- library helpers --------------------------------------------------------

def load_instance(path, attributes: Optional[str] = None) -> ProblemInstance:
    """Load JSON (``.json``), DIMACS (``.cnf``/``.dimacs`` plus attribute CSV)
    or classic NRP text (anything else). The instance is named after the file
    stem unless the format carries a name."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return ProblemInstance.loads(text)
    if path.suffix in (".cnf", ".dimacs"):
        attrs = Path(attributes) if attributes else path.with_suffix(".csv")
        return parse_dimacs_fm(text, attrs.read_text(), name=path.stem)
    return parse_classic_nrp(text, name=path.stem)


def _check_compatible(method: str, instance: ProblemInstance) -> None:
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if method == "eps" and len(instance.objectives) != 2:
        raise UsageError(f"eps needs a bi-objective instance; {instance.name} has "
                         f"{len(instance.objectives)} objectives")


def run_once(method: str, instance: ProblemInstance, flat: Mapping[str, Any], repeat: int = 0) -> RunRecord:
    """Run ``method`` once with seed ``flat['seed'] + repeat``."""
    _check_compatible(method, instance)
    seed = int(flat["seed"]) + repeat
    cfg = config_mod.method_config(method, flat, seed)
    result = _RUNNERS[method](instance, cfg)
    echo = {"flat": dict(flat), "effective": asdict(cfg)}
    return RunRecord(method=method, instance=instance, config=echo, seed=seed, repeat=repeat,
                     wall_time_s=result.timings["total"], archive=result.archive,
                     timings=result.timings, trace=result.trace)


def _run_job(args):
    return run_once(*args)


def solve_runs(method: str, instance: ProblemInstance, flat: Mapping[str, Any]) -> list[RunRecord]:
    repeats, jobs = int(flat["repeats"]), int(flat["jobs"])
    if repeats < 1 or jobs < 1:
        raise UsageError("repeats and jobs must be >= 1")
    _check_compatible(method, instance)
    config_mod.method_config(method, flat, int(flat["seed"]))  # fail fast on bad config
    work = [(method, instance, dict(flat), r) for r in range(repeats)]
    if jobs == 1 or repeats == 1:
        return [_run_job(w) for w in work]
    with ProcessPoolExecutor(max_workers=min(jobs, repeats)) as pool:
        return list(pool.map(_run_job, work))


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def _run_rows(method: str, records: Sequence[RunRecord], front: ParetoArchive) -> list[dict]:
    return [indicator_report(method, r.archive, front, r.wall_time_s).row() for r in records]


def _sort_key(r: RunRecord):
    return (r.method, r.seed, r.repeat, json.dumps(r.archive.to_json(), sort_keys=True))


def build_report(records: Sequence[RunRecord]) -> dict:
    """Union-front indicator table, one row per method averaged over its runs."""
    if not records:
        raise UsageError("no run records given")
    hashes = {r.instance_sha256 for r in records}
    if len(hashes) != 1:
        raise UsageError(f"run records reference {len(hashes)} different instances")
    records = sorted(records, key=_sort_key)
    front = union_front([r.archive for r in records])
    methods = sorted({r.method for r in records})
    rows, runs = [], {}
    for m in methods:
        per_run = _run_rows(m, [r for r in records if r.method == m], front)
        runs[m] = per_run
        row = {"method": m}
        for col in REPORT_COLUMNS[1:]:
            row[col] = _mean([p[col] for p in per_run])
        row["runs"] = len(per_run)
        rows.append(row)
    inst = records[0].instance
    return {"instance": {"name": inst.name, "sha256": instance_hash(inst)},
            "union_front": front.to_json(), "rows": rows, "runs": runs}


def report_csv(report: Mapping) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in report["rows"]:
        writer.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                         for c in REPORT_COLUMNS])
    return buf.getvalue()


def aggregate(records: Sequence[RunRecord], files: Sequence[str]) -> dict:
    """Per-run metrics against the union of these runs, plus their means."""
    front = union_front([r.archive for r in records])
    per_run = _run_rows(records[0].method, records, front)
    for p, r in zip(per_run, records):
        p["seed"] = r.seed
    means = {c: _mean([p[c] for p in per_run]) for c in REPORT_COLUMNS[1:]}
    return {"schema": "qasbse.aggregate/1", "method": records[0].method,
            "instance": {"name": records[0].instance.name, "sha256": records[0].instance_sha256},
            "runs": list(files), "per_run": per_run, "mean": means}


BENCH_SWEEPS = ("sub_size", "rate", "instance")
_SWEEP_KEYS = {"sub_size": ("cqha.sub_size", int), "rate": ("cqha.rate", float)}
PHASES = ("compile", "decompose", "sample", "local", "sort")


def bench_rows(method: str, instances: Sequence[ProblemInstance], sweep: str,
               values: Sequence[str], seeds: Sequence[int], flat: Mapping[str, Any]):
    """Return ``(rows, records)``; one run per (configuration, seed)."""
    if sweep not in BENCH_SWEEPS:
        raise UsageError(f"unknown sweep {sweep!r}; expected one of {', '.join(BENCH_SWEEPS)}")
    if sweep in _SWEEP_KEYS and method != "cqha":
        raise UsageError(f"sweeping {sweep} needs method cqha")
    if sweep == "instance":
        configs = [(inst.n, inst, dict(flat)) for inst in instances]
    else:
        if len(instances) != 1:
            raise UsageError(f"a {sweep} sweep takes exactly one instance")
        if not values:
            raise UsageError("--values is required for this sweep")
        key, cast = _SWEEP_KEYS[sweep]
        configs = []
        for v in values:
            try:
                val = cast(v)
            except ValueError:
                raise UsageError(f"bad {sweep} value {v!r}") from None
            configs.append((val, instances[0], {**flat, key: val}))
    rows, records = [], []
    for value, inst, cfg in configs:
        for seed in seeds:
            rec = run_once(method, inst, {**cfg, "seed": seed})
            row = {"value": value, "seed": seed, "n_variables": inst.n,
                   "elapsed_s": rec.wall_time_s, "archive_size": len(rec.archive)}
            for ph in PHASES:
                row[f"{ph}_s"] = rec.timings.get(ph, 0.0)
            rows.append(row)
            records.append(rec)
    return rows, records


# -- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


_FLAG_KEYS = {
    "seed": "seed", "repeats": "repeats", "jobs": "jobs", "time_budget": "time_budget",
    "weights": "weights", "reads": "reads", "sampler": "sampler.kind", "sweeps": "sampler.sweeps",
    "endpoint": "remote.endpoint", "penalty": "build.penalty", "sub_size": "cqha.sub_size",
    "rate": "cqha.rate", "max_loops": "cqha.max_loops", "impact": "cqha.impact",
    "population": "nsga2.population", "evaluations": "nsga2.evaluations",
    "crossover": "nsga2.crossover", "step": "eps.step", "node_limit": "eps.node_limit",
}


def _add_method_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (flags override --config file and QASBSE_* env)")
    g.add_argument("--config", help="flat key = value file")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="any config key")
    g.add_argument("--seed", type=int)
    g.add_argument("--time-budget", type=float, help="per-run wall-time budget in seconds")
    g.add_argument("--weights", type=int, help="weight vectors (moqa, cqha)")
    g.add_argument("--reads", type=int, help="reads per (sub-)QUBO")
    g.add_argument("--sampler", choices=("simulated_annealing", "exact", "steepest_descent", "remote"))
    g.add_argument("--sweeps", type=int)
    g.add_argument("--endpoint", help="remote sampler URL")
    g.add_argument("--penalty", type=float)
    g.add_argument("--sub-size", type=int)
    g.add_argument("--rate", type=float)
    g.add_argument("--max-loops", type=int)
    g.add_argument("--impact", choices=("total", "linear"))
    g.add_argument("--population", type=int)
    g.add_argument("--evaluations", type=int)
    g.add_argument("--crossover", choices=("uniform", "single_point"))
    g.add_argument("--step", type=float)
    g.add_argument("--node-limit", type=int)


def _flat_config(args) -> dict:
    file_text = source = None
    if args.config:
        source = args.config
        file_text = Path(args.config).read_text()
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = config_mod.parse_value(key.strip(), value)
    for attr, key in _FLAG_KEYS.items():
        if getattr(args, attr, None) is not None:
            overrides[key] = getattr(args, attr)
    return config_mod.resolve(file_text, overrides=overrides, source=source or "<config>")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qasbse", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a seeded synthetic instance")
    gsub = gen.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    g = gsub.add_parser("nrp", help="next-release problem")
    g.add_argument("requirements", type=int)
    g.add_argument("customers", type=int)
    g.add_argument("density", type=float)
    g.add_argument("--format", choices=("classic", "json"), default="classic")
    g = gsub.add_parser("fsp", help="feature-selection problem")
    g.add_argument("features", type=int)
    g.add_argument("ratio", type=float, help="cross-tree constraint ratio")
    g.add_argument("--format", choices=("json", "dimacs"), default="json")
    for g in gsub.choices.values():
        g.add_argument("--seed", type=int, default=0)
        g.add_argument("--out", required=True, help="output path (dimacs also writes <stem>.csv)")

    s = sub.add_parser("solve", help="run a method and write run records")
    s.add_argument("method", choices=METHODS)
    s.add_argument("instance")
    s.add_argument("--attrs", help="attribute CSV for a DIMACS instance")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--repeats", type=int)
    s.add_argument("--jobs", type=int)
    _add_method_options(s)

    r = sub.add_parser("report", help="indicator table over run records")
    r.add_argument("records", nargs="+", help="run record files or directories")
    r.add_argument("--out", required=True, help="output prefix; writes PREFIX.csv and PREFIX.json")

    b = sub.add_parser("bench", help="timing sweep over sub-QUBO size, rate or instances")
    b.add_argument("method", choices=METHODS)
    b.add_argument("instances", nargs="+")
    b.add_argument("--sweep", choices=BENCH_SWEEPS, default="sub_size")
    b.add_argument("--values", default="", help="comma-separated sweep values")
    b.add_argument("--seeds", default=None, help="comma-separated seeds (default: --seed)")
    b.add_argument("--out", required=True, help="CSV path")
    b.add_argument("--records", help="directory for per-run records")
    _add_method_options(b)
    return parser


# -- commands ---------------------------------------------------------------

def cmd_gen(args) -> int:
    out = Path(args.out)
    if args.kind == "nrp":
        inst = generate_nrp(args.requirements, args.customers, args.density, args.seed, name=out.stem)
        text = inst.dumps() + "\n" if args.format == "json" else serialize_classic_nrp(inst)
        write_atomic(out, text)
    else:
        inst = generate_fm(args.features, args.ratio, args.seed, name=out.stem)
        if args.format == "json":
            write_atomic(out, inst.dumps() + "\n")
        else:
            cnf, attrs = serialize_dimacs_fm(inst)
            write_atomic(out.with_suffix(".csv"), attrs)
            write_atomic(out, cnf)
    print(f"{instance_hash(load_instance(out))}  {out}")
    return 0


def _record_name(rec: RunRecord) -> str:
    return f"{rec.method}-{rec.instance.name}-s{rec.seed}.json"


def cmd_solve(args) -> int:
    inst = load_instance(args.instance, args.attrs)
    flat = _flat_config(args)
    records = solve_runs(args.method, inst, flat)
    out = Path(args.out)
    files = [_record_name(rec) for rec in records]
    summary = dump_json(aggregate(records, files))  # before any write, so failures leave nothing
    for rec, name in zip(records, files):
        write_atomic(out / name, dump_json(rec.to_json()))
        print(f"{out / name}  |S|={len(rec.archive)}  {rec.wall_time_s:.3f}s")
    agg = out / f"{args.method}-{inst.name}-aggregate.json"
    write_atomic(agg, summary)
    print(agg)
    return 0


def _collect_records(paths: Sequence[str]) -> list[RunRecord]:
    records = []
    for p in map(Path, paths):
        if p.is_dir():
            for f in sorted(p.glob("*.json")):
                if json.loads(f.read_text()).get("schema") == SCHEMA:
                    records.append(RunRecord.load(f))
        else:
            records.append(RunRecord.load(p))
    return records


def cmd_report(args) -> int:
    rep = build_report(_collect_records(args.records))
    write_atomic(f"{args.out}.csv", report_csv(rep))
    write_atomic(f"{args.out}.json", dump_json(rep))
    sys.stdout.write(report_csv(rep))
    return 0


def cmd_bench(args) -> int:
    instances = [load_instance(p) for p in args.instances]
    flat = _flat_config(args)
    seeds = [int(flat["seed"])] if args.seeds is None else [int(v) for v in args.seeds.split(",") if v]
    values = [v for v in args.values.split(",") if v]
    rows, records = bench_rows(args.method, instances, args.sweep, values, seeds, flat)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    write_atomic(args.out, buf.getvalue())
    if args.records:
        for rec, row in zip(records, rows):
            name = f"{rec.method}-{rec.instance.name}-{args.sweep}{row['value']}-s{rec.seed}.json"
            write_atomic(Path(args.records) / name, dump_json(rec.to_json()))
    sys.stdout.write(buf.getvalue())
    return 0


_COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "report": cmd_report, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return _COMMANDS[args.command](args)
    except (UsageError, config_mod.ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # every other failure is a runtime error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
