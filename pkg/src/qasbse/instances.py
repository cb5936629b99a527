"""Problem data model for the Next Release Problem (NRP) and the Feature
Selection Problem (FSP): parsing, generation, serialization and evaluation.

Variables are binary and densely indexed ``0..n-1``. Objectives are linear
with an explicit sense. Constraints are logical relations between variables.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from ._search import BinarySearch

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

IMPLIES = "implies"
EXCLUDES = "excludes"
IFF = "iff"
OR_GROUP = "or_group"
ALT_GROUP = "alt_group"
CLAUSE = "clause"
CONSTRAINT_KINDS = (IMPLIES, EXCLUDES, IFF, OR_GROUP, ALT_GROUP, CLAUSE)

VARIABLE_KINDS = ("requirement", "customer", "feature")
FSP_ATTRIBUTES = (("richness", MAXIMIZE), ("reliability", MAXIMIZE),
                  ("defects", MINIMIZE), ("cost", MINIMIZE))


class ParseError(ValueError):
    """Malformed instance file. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class InvalidInstance(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    id: int
    label: str
    kind: str = "feature"


@dataclass(frozen=True)
class Objective:
    name: str
    sense: str
    coefficients: tuple[float, ...]
    offset: float = 0.0

    def __post_init__(self):
        if self.sense not in (MINIMIZE, MAXIMIZE):
            raise InvalidInstance(f"objective {self.name!r}: unknown sense {self.sense!r}")
        object.__setattr__(self, "coefficients", tuple(_num(c) for c in self.coefficients))
        object.__setattr__(self, "offset", _num(self.offset))

    def value(self, x: Sequence[int]) -> float:
        return self.offset + float(np.dot(self.coefficients, np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class Constraint:
    """A logical constraint.

    ``vars`` is ``(a, b)`` for the binary kinds, ``(parent, *children)`` for
    the group kinds and the literal variables for ``clause``, whose polarities
    are in ``signs``.
    """

    kind: str
    vars: tuple[int, ...]
    signs: Optional[tuple[bool, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(int(v) for v in self.vars))
        if self.kind not in CONSTRAINT_KINDS:
            raise InvalidInstance(f"unknown constraint kind {self.kind!r}")
        if self.kind in (IMPLIES, EXCLUDES, IFF) and len(self.vars) != 2:
            raise InvalidInstance(f"{self.kind} takes exactly two variables")
        if self.kind in (OR_GROUP, ALT_GROUP) and len(self.vars) < 2:
            raise InvalidInstance(f"{self.kind} needs a parent and at least one child")
        if self.kind == CLAUSE:
            if not self.vars:
                raise InvalidInstance("clause must have at least one literal")
            if self.signs is None or len(self.signs) != len(self.vars):
                raise InvalidInstance("clause needs one sign per literal")
            object.__setattr__(self, "signs", tuple(bool(s) for s in self.signs))
        elif self.signs is not None:
            raise InvalidInstance(f"{self.kind} does not take literal signs")

    @classmethod
    def implies(cls, a: int, b: int) -> "Constraint":
        return cls(IMPLIES, (a, b))

    @classmethod
    def excludes(cls, a: int, b: int) -> "Constraint":
        return cls(EXCLUDES, (a, b))

    @classmethod
    def iff(cls, a: int, b: int) -> "Constraint":
        return cls(IFF, (a, b))

    @classmethod
    def or_group(cls, parent: int, children: Iterable[int]) -> "Constraint":
        return cls(OR_GROUP, (parent, *children))

    @classmethod
    def alt_group(cls, parent: int, children: Iterable[int]) -> "Constraint":
        return cls(ALT_GROUP, (parent, *children))

    @classmethod
    def clause(cls, literals: Iterable[tuple[int, bool]]) -> "Constraint":
        literals = list(literals)
        return cls(CLAUSE, tuple(v for v, _ in literals), tuple(s for _, s in literals))

    @property
    def literals(self) -> tuple[tuple[int, bool], ...]:
        return tuple(zip(self.vars, self.signs))

    @property
    def parent(self) -> int:
        return self.vars[0]

    @property
    def children(self) -> tuple[int, ...]:
        return self.vars[1:]

    def satisfied(self, x: Sequence[int]) -> bool:
        k = self.kind
        if k == IMPLIES:
            return x[self.vars[0]] <= x[self.vars[1]]
        if k == EXCLUDES:
            return x[self.vars[0]] * x[self.vars[1]] == 0
        if k == IFF:
            return x[self.vars[0]] == x[self.vars[1]]
        if k == OR_GROUP:
            return x[self.parent] <= max(x[c] for c in self.children)
        if k == ALT_GROUP:
            return sum(x[c] for c in self.children) == x[self.parent]
        return any(bool(x[v]) == s for v, s in self.literals)

    def to_clauses(self) -> list[tuple[tuple[int, bool], ...]]:
        """Equivalent CNF over the same variables."""
        k, v = self.kind, self.vars
        if k == IMPLIES:
            return [((v[0], False), (v[1], True))]
        if k == EXCLUDES:
            return [((v[0], False), (v[1], False))]
        if k == IFF:
            return [((v[0], False), (v[1], True)), ((v[0], True), (v[1], False))]
        if k == OR_GROUP:
            return [((self.parent, False), *((c, True) for c in self.children))]
        if k == ALT_GROUP:
            p, ch = self.parent, self.children
            out = [((p, False), *((c, True) for c in ch))]
            out += [((c, False), (p, True)) for c in ch]
            out += [((ch[i], False), (ch[j], False))
                    for i in range(len(ch)) for j in range(i + 1, len(ch))]
            return out
        return [self.literals]

    def to_json(self) -> dict:
        if self.kind in (IMPLIES, EXCLUDES, IFF):
            return {"kind": self.kind, "a": self.vars[0], "b": self.vars[1]}
        if self.kind in (OR_GROUP, ALT_GROUP):
            return {"kind": self.kind, "parent": self.parent, "children": list(self.children)}
        return {"kind": CLAUSE, "literals": [[v, s] for v, s in self.literals]}

    @classmethod
    def from_json(cls, d: Mapping) -> "Constraint":
        kind = d["kind"]
        if kind in (IMPLIES, EXCLUDES, IFF):
            return cls(kind, (d["a"], d["b"]))
        if kind in (OR_GROUP, ALT_GROUP):
            return cls(kind, (d["parent"], *d["children"]))
        if kind == CLAUSE:
            return cls.clause((int(v), bool(s)) for v, s in d["literals"])
        raise InvalidInstance(f"unknown constraint kind {kind!r}")


@dataclass(frozen=True)
class Evaluation:
    objective_values: tuple[float, ...]
    violations: dict = field(hash=False)
    feasible: bool


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    variables: tuple[Variable, ...]
    objectives: tuple[Objective, ...]
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "objectives", tuple(self.objectives))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        n = len(self.variables)
        if [v.id for v in self.variables] != list(range(n)):
            raise InvalidInstance("variable ids must be dense 0..n-1 in order")
        if len(self.objectives) < 2:
            raise InvalidInstance("at least two objectives are required")
        for obj in self.objectives:
            if len(obj.coefficients) != n:
                raise InvalidInstance(
                    f"objective {obj.name!r} has {len(obj.coefficients)} coefficients, expected {n}")
        for c in self.constraints:
            for v in c.vars:
                if not 0 <= v < n:
                    raise InvalidInstance(f"{c.kind} references undeclared variable {v}")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def senses(self) -> tuple[str, ...]:
        return tuple(o.sense for o in self.objectives)

    @cached_property
    def objective_matrix(self) -> np.ndarray:
        return np.array([o.coefficients for o in self.objectives], dtype=float)

    @cached_property
    def objective_offsets(self) -> np.ndarray:
        return np.array([o.offset for o in self.objectives], dtype=float)

    def clauses(self) -> list[tuple[tuple[int, bool], ...]]:
        out = []
        for c in self.constraints:
            out.extend(c.to_clauses())
        return out

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "name": self.name,
            "variables": [{"id": v.id, "label": v.label, "kind": v.kind} for v in self.variables],
            "objectives": [
                {"name": o.name, "sense": o.sense, "coefficients": list(o.coefficients),
                 "offset": o.offset}
                for o in self.objectives
            ],
            "constraints": [c.to_json() for c in self.constraints],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, d: Mapping) -> "ProblemInstance":
        try:
            return cls(
                name=d["name"],
                variables=tuple(Variable(int(v["id"]), str(v["label"]), v.get("kind", "feature"))
                                for v in d["variables"]),
                objectives=tuple(Objective(o["name"], o["sense"], tuple(o["coefficients"]),
                                           _num(o.get("offset", 0)))
                                 for o in d["objectives"]),
                constraints=tuple(Constraint.from_json(c) for c in d.get("constraints", ())),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInstance(f"malformed instance document: {exc!r}") from exc

    @classmethod
    def loads(cls, text: str) -> "ProblemInstance":
        return cls.from_json(json.loads(text))


def _num(v) -> float | int:
    """Keep integral values as int so serialized files stay readable."""
    f = float(v)
    if not np.isfinite(f):
        raise InvalidInstance(f"non-finite coefficient {v!r}")
    return int(f) if f.is_integer() and abs(f) < 2**53 else f


# -- evaluation -----------------------------------------------------------

def evaluate(instance: ProblemInstance, x: Sequence[int]) -> Evaluation:
    x = np.asarray(x)
    if x.shape != (instance.n,):
        raise ValueError(f"assignment has length {x.size}, instance has {instance.n} variables")
    objs, counts = evaluate_batch(instance, x[None, :], per_kind=True)
    violations = {k: int(counts[k][0]) for k in CONSTRAINT_KINDS if k in counts}
    total = sum(violations.values())
    return Evaluation(tuple(float(v) for v in objs[0]), violations, total == 0)


def evaluate_batch(instance: ProblemInstance, X: np.ndarray, per_kind: bool = False):
    """Objective values (N, M) and violation counts for a batch of assignments.

    Returns total violations per row, or a ``kind -> counts`` dict when
    ``per_kind`` is set.
    """
    X = np.asarray(X, dtype=np.int8)
    if X.ndim != 2 or X.shape[1] != instance.n:
        raise ValueError(f"expected shape (N, {instance.n}), got {X.shape}")
    objs = X.astype(float) @ instance.objective_matrix.T + instance.objective_offsets
    counts = {k: np.zeros(len(X), dtype=np.int64) for k in CONSTRAINT_KINDS}
    for kind, fn in _batch_checks(instance).items():
        counts[kind] += fn(X)
    if per_kind:
        return objs, counts
    return objs, sum(counts.values())


def _batch_checks(instance: ProblemInstance) -> dict:
    checks = {}
    by_kind: dict[str, list[Constraint]] = {k: [] for k in CONSTRAINT_KINDS}
    for c in instance.constraints:
        by_kind[c.kind].append(c)

    def pair_arrays(cs):
        return np.array([c.vars[0] for c in cs]), np.array([c.vars[1] for c in cs])

    if by_kind[IMPLIES]:
        a, b = pair_arrays(by_kind[IMPLIES])
        checks[IMPLIES] = lambda X: ((X[:, a] == 1) & (X[:, b] == 0)).sum(axis=1)
    if by_kind[EXCLUDES]:
        a2, b2 = pair_arrays(by_kind[EXCLUDES])
        checks[EXCLUDES] = lambda X: ((X[:, a2] == 1) & (X[:, b2] == 1)).sum(axis=1)
    if by_kind[IFF]:
        a3, b3 = pair_arrays(by_kind[IFF])
        checks[IFF] = lambda X: (X[:, a3] != X[:, b3]).sum(axis=1)
    if by_kind[OR_GROUP]:
        groups = [(c.parent, list(c.children)) for c in by_kind[OR_GROUP]]
        checks[OR_GROUP] = lambda X: sum(
            ((X[:, p] == 1) & (X[:, ch].max(axis=1) == 0)).astype(np.int64) for p, ch in groups)
    if by_kind[ALT_GROUP]:
        alts = [(c.parent, list(c.children)) for c in by_kind[ALT_GROUP]]
        checks[ALT_GROUP] = lambda X: sum(
            (X[:, ch].sum(axis=1) != X[:, p]).astype(np.int64) for p, ch in alts)
    if by_kind[CLAUSE]:
        cls = [(np.array(c.vars), np.array(c.signs, dtype=np.int8)) for c in by_kind[CLAUSE]]
        checks[CLAUSE] = lambda X: sum(
            (~(X[:, v] == s).any(axis=1)).astype(np.int64) for v, s in cls)
    return checks


def find_feasible(instance: ProblemInstance) -> Optional[np.ndarray]:
    """Some assignment satisfying every constraint, or None."""
    x, _ = BinarySearch(instance.n, instance.clauses()).solve()
    return x


# -- classic NRP format ---------------------------------------------------

class _Tokens:
    def __init__(self, text: str):
        self.lines = [ln.split() for ln in text.replace("\r\n", "\n").replace("\r", "\n").split("\n")]
        self.i = 0

    def line(self, what: str) -> tuple[int, list[str]]:
        while self.i < len(self.lines) and not self.lines[self.i]:
            self.i += 1
        if self.i >= len(self.lines):
            raise ParseError(f"unexpected end of file, expected {what}", self.i)
        self.i += 1
        return self.i, self.lines[self.i - 1]

    def ints(self, what: str, count: Optional[int] = None) -> tuple[int, list[int]]:
        lineno, toks = self.line(what)
        try:
            vals = [int(t) for t in toks]
        except ValueError:
            raise ParseError(f"non-integer token in {what}: {' '.join(toks)!r}", lineno) from None
        if count is not None and len(vals) != count:
            raise ParseError(f"expected {count} values for {what}, found {len(vals)}", lineno)
        return lineno, vals

    def count(self, what: str) -> tuple[int, int]:
        lineno, vals = self.ints(what, 1)
        if vals[0] < 0:
            raise ParseError(f"negative {what}", lineno)
        return lineno, vals[0]

    def trailing(self) -> Optional[int]:
        for j in range(self.i, len(self.lines)):
            if self.lines[j]:
                return j + 1
        return None


def parse_classic_nrp(text: str, name: str = "nrp") -> ProblemInstance:
    """Parse the classic multi-level NRP text format.

    Dependency lines ``a b`` mean requirement ``b`` requires ``a``. Customer
    lines are ``profit k id1 .. idk`` with 1-based requirement ids.
    """
    tok = _Tokens(text)
    _, levels = tok.count("level count")
    costs: list[int] = []
    for lvl in range(levels):
        _, k = tok.count(f"requirement count of level {lvl + 1}")
        if k == 0:
            continue
        _, vals = tok.ints(f"costs of level {lvl + 1}", k)
        costs.extend(vals)
    n_req = len(costs)

    def req_id(v: int, lineno: int) -> int:
        if not 1 <= v <= n_req:
            raise ParseError(f"requirement id {v} outside 1..{n_req}", lineno)
        return v - 1

    _, n_dep = tok.count("dependency count")
    deps = []
    for _ in range(n_dep):
        lineno, vals = tok.ints("dependency", 2)
        deps.append((req_id(vals[1], lineno), req_id(vals[0], lineno)))
    _, n_cust = tok.count("customer count")
    customers = []
    for _ in range(n_cust):
        lineno, vals = tok.ints("customer")
        if len(vals) < 2 or vals[1] < 0 or len(vals) != 2 + vals[1]:
            raise ParseError("customer line must be 'profit k id1 .. idk'", lineno)
        customers.append((vals[0], [req_id(v, lineno) for v in vals[2:]]))
    extra = tok.trailing()
    if extra is not None:
        raise ParseError("unexpected trailing content", extra)
    return build_nrp(name, costs, customers, deps)


def build_nrp(name: str, costs: Sequence[float], customers: Sequence[tuple[float, Sequence[int]]],
              dependencies: Sequence[tuple[int, int]]) -> ProblemInstance:
    """Assemble an NRP instance.

    ``customers`` holds ``(profit, requested requirement ids)`` and
    ``dependencies`` holds ``(dependent, prerequisite)`` pairs, 0-based.
    """
    n_req, n_cust = len(costs), len(customers)
    n = n_req + n_cust
    variables = [Variable(i, f"r{i + 1}", "requirement") for i in range(n_req)]
    variables += [Variable(n_req + k, f"c{k + 1}", "customer") for k in range(n_cust)]
    cost = list(costs) + [0] * n_cust
    profit = [0] * n_req + [p for p, _ in customers]
    constraints = [Constraint.implies(d, p) for d, p in dependencies]
    for k, (_, reqs) in enumerate(customers):
        constraints += [Constraint.implies(n_req + k, r) for r in reqs]
    return ProblemInstance(
        name,
        tuple(variables),
        (Objective("cost", MINIMIZE, tuple(cost)), Objective("profit", MAXIMIZE, tuple(profit))),
        tuple(constraints),
    )


def serialize_classic_nrp(instance: ProblemInstance) -> str:
    """Inverse of :func:`parse_classic_nrp` for instances built by :func:`build_nrp`."""
    reqs = [v.id for v in instance.variables if v.kind == "requirement"]
    custs = [v.id for v in instance.variables if v.kind == "customer"]
    if reqs != list(range(len(reqs))) or custs != list(range(len(reqs), instance.n)):
        raise InvalidInstance("classic NRP layout needs requirements first, then customers")
    cost, profit = instance.objectives[0].coefficients, instance.objectives[1].coefficients
    n_req = len(reqs)
    deps, requests = [], {k: [] for k in custs}
    for c in instance.constraints:
        if c.kind != IMPLIES:
            raise InvalidInstance(f"classic NRP format cannot express {c.kind}")
        a, b = c.vars
        if a < n_req and b < n_req:
            deps.append((b, a))
        elif a >= n_req and b < n_req:
            requests[a].append(b)
        else:
            raise InvalidInstance("implication between customers is not expressible")
    lines = ["1", str(n_req), " ".join(str(_num(cost[i])) for i in reqs), str(len(deps))]
    lines += [f"{p + 1} {d + 1}" for p, d in deps]
    lines.append(str(len(custs)))
    for k in custs:
        ids = requests[k]
        lines.append(" ".join(str(v) for v in [_num(profit[k]), len(ids), *(r + 1 for r in ids)]))
    return "\n".join(lines) + "\n"


# -- DIMACS feature models ------------------------------------------------

def parse_dimacs_fm(cnf_text: str, attributes_text: str, name: str = "fm") -> ProblemInstance:
    """Parse a DIMACS CNF feature model plus its per-feature attribute CSV."""
    n_vars = None
    n_declared = None
    clauses: list[list[tuple[int, bool]]] = []
    current: list[tuple[int, bool]] = []
    current_line = None
    for lineno, raw in enumerate(cnf_text.replace("\r\n", "\n").split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError("header must be 'p cnf V C'", lineno)
            try:
                n_vars, n_declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError("non-integer counts in header", lineno) from None
            continue
        if n_vars is None:
            raise ParseError("clause before 'p cnf' header", lineno)
        for t in line.split():
            try:
                lit = int(t)
            except ValueError:
                raise ParseError(f"non-integer literal {t!r}", lineno) from None
            if lit == 0:
                if not current:
                    raise ParseError("empty clause", lineno)
                clauses.append(current)
                current = []
                continue
            if abs(lit) > n_vars:
                raise ParseError(f"literal {lit} exceeds declared variable count {n_vars}", lineno)
            if not current:
                current_line = lineno
            current.append((abs(lit) - 1, lit > 0))
    if n_vars is None:
        raise ParseError("missing 'p cnf' header")
    if current:
        raise ParseError("last clause not terminated by 0", current_line)
    if n_declared is not None and len(clauses) != n_declared:
        raise ParseError(f"header declares {n_declared} clauses, found {len(clauses)}")

    reader = csv.DictReader(io.StringIO(attributes_text.strip()))
    expected = ["feature"] + [a for a, _ in FSP_ATTRIBUTES]
    if reader.fieldnames is None or [f.strip().lower() for f in reader.fieldnames] != expected:
        raise ParseError(f"attribute header must be {','.join(expected)}", 1)
    rows = list(reader)
    if len(rows) != n_vars:
        raise ParseError(f"attribute file has {len(rows)} rows, CNF declares {n_vars} variables")
    labels, attrs = [], {a: [] for a, _ in FSP_ATTRIBUTES}
    for r, row in enumerate(rows, start=2):
        row = {k.strip().lower(): v for k, v in row.items()}
        labels.append(row["feature"].strip())
        for a, _ in FSP_ATTRIBUTES:
            try:
                attrs[a].append(float(row[a]))
            except (TypeError, ValueError):
                raise ParseError(f"non-numeric {a} value {row[a]!r}", r) from None
    variables = tuple(Variable(i, labels[i] or f"f{i + 1}", "feature") for i in range(n_vars))
    objectives = tuple(Objective(a, sense, tuple(attrs[a])) for a, sense in FSP_ATTRIBUTES)
    constraints = tuple(Constraint.clause(c) for c in clauses)
    return ProblemInstance(name, variables, objectives, constraints)


def serialize_dimacs_fm(instance: ProblemInstance) -> tuple[str, str]:
    """CNF text and attribute CSV for a four-attribute feature model."""
    names = [o.name for o in instance.objectives]
    if names != [a for a, _ in FSP_ATTRIBUTES]:
        raise InvalidInstance(f"expected objectives {[a for a, _ in FSP_ATTRIBUTES]}, got {names}")
    clauses = instance.clauses()
    lines = [f"c {instance.name}", f"p cnf {instance.n} {len(clauses)}"]
    lines += [" ".join(str(v + 1 if s else -(v + 1)) for v, s in c) + " 0" for c in clauses]
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["feature"] + names)
    for v in instance.variables:
        w.writerow([v.label] + [_num(o.coefficients[v.id]) for o in instance.objectives])
    return "\n".join(lines) + "\n", out.getvalue()


# -- generators -----------------------------------------------------------

def generate_nrp(n_requirements: int, n_customers: int, density: float, seed: int,
                 name: Optional[str] = None) -> ProblemInstance:
    """Seeded classic-style NRP instance.

    Costs are uniform in [1, 10] and profits in [1, 50]. Each customer
    requests ``1 + floor(density * n_requirements)`` distinct requirements;
    ``floor(density * n_requirements)`` dependency pairs point from a higher
    to a lower requirement index, so the dependency graph is acyclic.
    """
    if n_requirements < 1 or n_customers < 1:
        raise ValueError("counts must be >= 1")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    costs = rng.integers(1, 11, size=n_requirements).tolist()
    k = min(n_requirements, 1 + int(np.floor(density * n_requirements)))
    customers = []
    for _ in range(n_customers):
        profit = int(rng.integers(1, 51))
        reqs = sorted(rng.choice(n_requirements, size=k, replace=False).tolist())
        customers.append((profit, reqs))
    n_dep = int(np.floor(density * n_requirements)) if n_requirements > 1 else 0
    max_pairs = n_requirements * (n_requirements - 1) // 2
    n_dep = min(n_dep, max_pairs)
    deps: set[tuple[int, int]] = set()
    while len(deps) < n_dep:
        a, b = sorted(rng.choice(n_requirements, size=2, replace=False).tolist())
        deps.add((b, a))
    name = name or f"nrp-{n_requirements}x{n_customers}-s{seed}"
    return build_nrp(name, costs, customers, sorted(deps))


def generate_fm(n_features: int, cross_tree_ratio: float, seed: int,
                name: Optional[str] = None, max_attempts: int = 1000) -> ProblemInstance:
    """Seeded random feature model with four attribute objectives.

    The root is mandatory. Each parent's children are split into groups:
    singletons become mandatory (IFF) or optional (IMPLIES) children, larger
    groups become OR or alternative groups. Cross-tree IMPLIES/EXCLUDES
    constraints are redrawn until the model is satisfiable.
    """
    if n_features < 2:
        raise ValueError("n_features must be >= 2")
    rng = np.random.default_rng(seed)
    parents = [-1] + [int(rng.integers(0, i)) for i in range(1, n_features)]
    children: dict[int, list[int]] = {i: [] for i in range(n_features)}
    for i in range(1, n_features):
        children[parents[i]].append(i)

    tree: list[Constraint] = [Constraint.clause([(0, True)])]
    for p in range(n_features):
        ch = list(children[p])
        rng.shuffle(ch)
        while ch:
            size = int(rng.integers(1, min(4, len(ch)) + 1))
            group, ch = sorted(ch[:size]), ch[size:]
            if size == 1:
                c = group[0]
                tree.append(Constraint.iff(c, p) if rng.random() < 0.3 else Constraint.implies(c, p))
            elif rng.random() < 0.5:
                tree.append(Constraint.or_group(p, group))
                tree += [Constraint.implies(c, p) for c in group]
            else:
                tree.append(Constraint.alt_group(p, group))

    attrs = {
        "richness": rng.integers(1, 11, size=n_features),
        "reliability": rng.integers(1, 11, size=n_features),
        "defects": rng.integers(0, 11, size=n_features),
        "cost": rng.integers(5, 16, size=n_features),
    }
    variables = tuple(Variable(i, f"f{i + 1}", "feature") for i in range(n_features))
    objectives = tuple(Objective(a, sense, tuple(int(v) for v in attrs[a]))
                       for a, sense in FSP_ATTRIBUTES)
    name = name or f"fm-{n_features}-s{seed}"

    n_cross = int(np.floor(cross_tree_ratio * n_features))
    for _ in range(max_attempts):
        cross: list[Constraint] = []
        candidates = list(range(1, n_features))
        while len(cross) < n_cross and len(candidates) >= 2:
            a, b = (int(v) for v in rng.choice(candidates, size=2, replace=False))
            cross.append(Constraint.implies(a, b) if rng.random() < 0.5 else Constraint.excludes(a, b))
        inst = ProblemInstance(name, variables, objectives, tuple(tree + cross))
        if find_feasible(inst) is not None:
            return inst
    raise RuntimeError(f"no satisfiable cross-tree constraint set after {max_attempts} attempts")
