"""Compile a multi-objective instance plus a weight vector into a QUBO.

Objectives are min-max scaled to [0, 1] minimization form and aggregated by
a weight vector on the simplex. Constraints become quadratic penalties;
clauses with more than two literals are quadratized by chaining auxiliary
variables, each reifying the product of two affine literals.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .instances import (ALT_GROUP, CLAUSE, EXCLUDES, IFF, IMPLIES, MAXIMIZE, OR_GROUP,
                        Constraint, ProblemInstance)

# A literal is (variable, positive); its value is x if positive else 1 - x.
Literal = tuple[int, bool]


class ScalingError(ValueError):
    pass


@dataclass(frozen=True)
class ScaledObjective:
    """Minimization objective ``offset + coefficients @ x`` with range [0, 1]."""

    name: str
    coefficients: np.ndarray
    offset: float
    lower: float
    upper: float

    def value(self, x) -> float:
        return float(self.offset + self.coefficients @ np.asarray(x, dtype=float))


@dataclass(frozen=True)
class QuboBuildConfig:
    penalty: float = 2.0
    rosenberg_penalty: Optional[float] = None
    scaling: str = "min-max"

    def __post_init__(self):
        if not self.penalty > 1.0:
            raise ValueError(f"penalty must exceed 1, got {self.penalty}")
        if self.rosenberg_penalty is None:
            object.__setattr__(self, "rosenberg_penalty", 2.0 * self.penalty)
        if self.rosenberg_penalty < 2.0 * self.penalty:
            raise ValueError("rosenberg_penalty must be at least twice the penalty")
        if self.scaling != "min-max":
            raise ValueError(f"unsupported scaling mode {self.scaling!r}")


@dataclass(frozen=True)
class AuxVar:
    id: int
    u: Literal
    v: Literal


def _lit_json(lit: Literal) -> int:
    v, pos = lit
    return v if pos else ~v


def _lit_from_json(code: int) -> Literal:
    code = int(code)
    return (code, True) if code >= 0 else (~code, False)


class Qubo:
    """Quadratic pseudo-Boolean function over ``n_total`` binary variables.

    ``energy(x) = offset + linear @ x + sum_{i<j} q_ij x_i x_j``. Variables
    ``origin_n..n_total-1`` are auxiliaries described by ``aux``.
    """

    def __init__(self, n_total: int, linear=None, quadratic: Optional[Mapping] = None,
                 offset: float = 0.0, aux: Sequence[AuxVar] = (), origin_n: Optional[int] = None):
        self.n_total = int(n_total)
        self.origin_n = self.n_total if origin_n is None else int(origin_n)
        lin = np.zeros(self.n_total)
        if isinstance(linear, Mapping):
            for i, c in linear.items():
                lin[int(i)] += c
        elif linear is not None:
            lin[:] = np.asarray(linear, dtype=float)
        self.linear = lin
        acc: dict[tuple[int, int], float] = {}
        for (i, j), c in (quadratic or {}).items():
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"quadratic term on a single variable ({i}, {j})")
            key = (i, j) if i < j else (j, i)
            acc[key] = acc.get(key, 0.0) + float(c)
        keys = sorted(k for k, c in acc.items() if c != 0.0)
        self.qi = np.array([k[0] for k in keys], dtype=np.int64)
        self.qj = np.array([k[1] for k in keys], dtype=np.int64)
        self.qv = np.array([acc[k] for k in keys], dtype=float)
        if keys and (self.qi.min() < 0 or self.qj.max() >= self.n_total):
            raise ValueError("quadratic term references a variable outside the QUBO")
        self.offset = float(offset)
        self.aux = tuple(aux)
        if [a.id for a in self.aux] != list(range(self.origin_n, self.n_total)):
            raise ValueError("auxiliary ids must occupy origin_n..n_total-1 in order")
        for a in self.aux:
            if a.u[0] >= a.id or a.v[0] >= a.id:
                raise ValueError(f"auxiliary {a.id} must reify earlier variables")

    def __eq__(self, other):
        if not isinstance(other, Qubo):
            return NotImplemented
        return (self.n_total == other.n_total and self.origin_n == other.origin_n
                and self.offset == other.offset and self.aux == other.aux
                and np.array_equal(self.linear, other.linear)
                and np.array_equal(self.qi, other.qi) and np.array_equal(self.qj, other.qj)
                and np.array_equal(self.qv, other.qv))

    __hash__ = None

    @property
    def quadratic(self) -> dict[tuple[int, int], float]:
        return {(int(i), int(j)): float(c) for i, j, c in zip(self.qi, self.qj, self.qv)}

    def __repr__(self):
        return (f"Qubo(n_total={self.n_total}, origin_n={self.origin_n}, "
                f"quadratic_terms={len(self.qv)}, offset={self.offset:g})")

    def energy(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_total,):
            raise ValueError(f"assignment has length {x.size}, QUBO has {self.n_total} variables")
        return float(self.offset + self.linear @ x + self.qv @ (x[self.qi] * x[self.qj]))

    def energies(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_total:
            raise ValueError(f"expected shape (N, {self.n_total}), got {X.shape}")
        return self.offset + X @ self.linear + (X[:, self.qi] * X[:, self.qj]) @ self.qv

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric CSR form ``(indptr, indices, data)`` of the quadratic terms."""
        rows = np.concatenate([self.qi, self.qj])
        cols = np.concatenate([self.qj, self.qi])
        vals = np.concatenate([self.qv, self.qv])
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        indptr = np.zeros(self.n_total + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return np.cumsum(indptr), cols.astype(np.int64), vals

    def local_fields(self, x) -> np.ndarray:
        """``linear_i + sum_j q_ij x_j``; flipping bit i changes energy by ``(1 - 2 x_i) * field_i``."""
        x = np.asarray(x, dtype=float)
        h = self.linear.copy()
        np.add.at(h, self.qi, self.qv * x[self.qj])
        np.add.at(h, self.qj, self.qv * x[self.qi])
        return h

    def to_json(self) -> dict:
        return {
            "n_total": self.n_total,
            "origin_n": self.origin_n,
            "offset": self.offset,
            "linear": [[i, float(c)] for i, c in enumerate(self.linear) if c != 0.0],
            "quadratic": [[int(i), int(j), float(c)] for i, j, c in zip(self.qi, self.qj, self.qv)],
            "aux": [[a.id, _lit_json(a.u), _lit_json(a.v)] for a in self.aux],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "Qubo":
        return cls(
            d["n_total"],
            linear={int(i): float(c) for i, c in d.get("linear", ())},
            quadratic={(int(i), int(j)): float(c) for i, j, c in d.get("quadratic", ())},
            offset=float(d.get("offset", 0.0)),
            aux=tuple(AuxVar(int(a), _lit_from_json(u), _lit_from_json(v))
                      for a, u, v in d.get("aux", ())),
            origin_n=d.get("origin_n"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


class _Builder:
    def __init__(self, n: int):
        self.n = n
        self.const = 0.0
        self.lin: dict[int, float] = {}
        self.quad: dict[tuple[int, int], float] = {}
        self.aux: list[AuxVar] = []

    def add_linear(self, i: int, c: float) -> None:
        self.lin[i] = self.lin.get(i, 0.0) + c

    def add_quadratic(self, i: int, j: int, c: float) -> None:
        if i == j:
            self.add_linear(i, c)
            return
        key = (i, j) if i < j else (j, i)
        self.quad[key] = self.quad.get(key, 0.0) + c

    def add_literal(self, lit: Literal, c: float) -> None:
        v, pos = lit
        if pos:
            self.add_linear(v, c)
        else:
            self.const += c
            self.add_linear(v, -c)

    def add_product(self, u: Literal, v: Literal, c: float) -> None:
        """Add ``c * lit(u) * lit(v)`` expanded into monomials."""
        (i, pu), (j, pv) = u, v
        if i == j:
            if pu == pv:
                self.add_literal(u, c)
            return  # x * (1 - x) == 0
        if pu and pv:
            self.add_quadratic(i, j, c)
        elif pu and not pv:
            self.add_linear(i, c)
            self.add_quadratic(i, j, -c)
        elif pv and not pu:
            self.add_linear(j, c)
            self.add_quadratic(i, j, -c)
        else:
            self.const += c
            self.add_linear(i, -c)
            self.add_linear(j, -c)
            self.add_quadratic(i, j, c)

    def reify(self, u: Literal, v: Literal, strength: float) -> Literal:
        """New auxiliary z with penalty ``strength * (uv - 2uz - 2vz + 3z)``,
        zero iff ``z == lit(u) * lit(v)`` and at least ``strength`` otherwise."""
        z = self.n + len(self.aux)
        self.aux.append(AuxVar(z, u, v))
        zl = (z, True)
        self.add_product(u, v, strength)
        self.add_product(u, zl, -2.0 * strength)
        self.add_product(v, zl, -2.0 * strength)
        self.add_linear(z, 3.0 * strength)
        return zl

    def product_penalty(self, factors: Sequence[Literal], p: float, p_r: float) -> None:
        """Add ``p * prod(lit(f))``, quadratizing left to right."""
        factors = _simplify_product(factors)
        if factors is None:
            return
        if len(factors) == 1:
            self.add_literal(factors[0], p)
            return
        acc = factors[0]
        for f in factors[1:-1]:
            acc = self.reify(acc, f, p_r)
        self.add_product(acc, factors[-1], p)

    def build(self, origin_n: int) -> Qubo:
        n_total = self.n + len(self.aux)
        return Qubo(n_total, self.lin, self.quad, self.const, tuple(self.aux), origin_n)


def _simplify_product(factors: Sequence[Literal]) -> Optional[list[Literal]]:
    """Drop repeated literals; None when the product is identically zero."""
    seen: dict[int, bool] = {}
    out = []
    for v, pos in factors:
        if v in seen:
            if seen[v] != pos:
                return None
            continue
        seen[v] = pos
        out.append((v, pos))
    return out


def scale_objectives(instance: ProblemInstance) -> tuple[ScaledObjective, ...]:
    """Min-max scale every objective to a [0, 1] minimization objective using
    analytic coefficient-sum bounds."""
    out = []
    for obj in instance.objectives:
        c = np.asarray(obj.coefficients, dtype=float)
        lo = float(np.minimum(c, 0.0).sum() + obj.offset)
        hi = float(np.maximum(c, 0.0).sum() + obj.offset)
        span = hi - lo
        if not span > 0.0:
            raise ScalingError(f"objective {obj.name!r} is constant ({lo}); cannot scale")
        if obj.sense == MAXIMIZE:
            out.append(ScaledObjective(obj.name, -c / span, (hi - obj.offset) / span, lo, hi))
        else:
            out.append(ScaledObjective(obj.name, c / span, (obj.offset - lo) / span, lo, hi))
    return tuple(out)


def random_weight(m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the (m-1)-simplex via normalized exponentials."""
    if m < 2:
        raise ValueError("need at least two objectives")
    e = rng.exponential(size=m)
    return e / e.sum()


def _check_weights(w: Sequence[float], m: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (m,):
        raise ValueError(f"expected {m} weights, got {w.shape}")
    if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    return w


def model_to_qubo(scaled: Sequence[ScaledObjective], w: Sequence[float],
                  constraints: Iterable[Constraint],
                  cfg: QuboBuildConfig = QuboBuildConfig()) -> Qubo:
    """Weighted sum of scaled objectives plus constraint penalties."""
    w = _check_weights(w, len(scaled))
    n = len(scaled[0].coefficients)
    b = _Builder(n)
    agg = np.zeros(n)
    for wm, obj in zip(w, scaled):
        if len(obj.coefficients) != n:
            raise ValueError("scaled objectives do not share a variable space")
        agg += wm * obj.coefficients
        b.const += wm * obj.offset
    for i in np.flatnonzero(agg):
        b.add_linear(int(i), float(agg[i]))

    p, p_r = cfg.penalty, cfg.rosenberg_penalty
    for c in constraints:
        k = c.kind
        if k == IMPLIES:
            b.add_product((c.vars[0], True), (c.vars[1], False), p)
        elif k == EXCLUDES:
            b.add_product((c.vars[0], True), (c.vars[1], True), p)
        elif k == IFF:
            x, y = c.vars
            b.add_linear(x, p)
            b.add_linear(y, p)
            b.add_quadratic(x, y, -2.0 * p)
        elif k == ALT_GROUP:
            terms = [(ch, 1.0) for ch in c.children] + [(c.parent, -1.0)]
            coef: dict[int, float] = {}
            for v, s in terms:
                coef[v] = coef.get(v, 0.0) + s
            items = [(v, s) for v, s in coef.items() if s != 0.0]
            for a, (v, s) in enumerate(items):
                b.add_linear(v, p * s * s)
                for v2, s2 in items[a + 1:]:
                    b.add_quadratic(v, v2, 2.0 * p * s * s2)
        elif k == OR_GROUP:
            b.product_penalty([(c.parent, True)] + [(ch, False) for ch in c.children], p, p_r)
        elif k == CLAUSE:
            b.product_penalty([(v, not s) for v, s in c.literals], p, p_r)
        else:  # pragma: no cover - Constraint validates kinds
            raise ValueError(k)
    return b.build(origin_n=n)


def compile_instance(instance: ProblemInstance, w: Sequence[float],
                     cfg: QuboBuildConfig = QuboBuildConfig()) -> Qubo:
    return model_to_qubo(scale_objectives(instance), w, instance.constraints, cfg)


def weighted_objective(scaled: Sequence[ScaledObjective], w: Sequence[float], X) -> np.ndarray:
    """``sum_m w_m * scaled_m(x)`` for each row of X (original variables only)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    C = np.array([s.coefficients for s in scaled])
    off = np.array([s.offset for s in scaled])
    return (X @ C.T + off) @ np.asarray(w, dtype=float)


def _lit_values(X: np.ndarray, lit: Literal) -> np.ndarray:
    v, pos = lit
    return X[..., v] if pos else 1 - X[..., v]


def complete_auxiliaries(q: Qubo, x) -> np.ndarray:
    """Extend an assignment of the original variables with the auxiliary
    values that minimize energy (each auxiliary equals its reified product).

    Accepts a single assignment or a 2-D batch.
    """
    x = np.asarray(x, dtype=np.int8)
    if x.shape[-1] != q.origin_n:
        raise ValueError(f"expected {q.origin_n} original variables, got {x.shape[-1]}")
    if not q.aux:
        return x.copy()
    full = np.zeros(x.shape[:-1] + (q.n_total,), dtype=np.int8)
    full[..., :q.origin_n] = x
    for a in q.aux:
        full[..., a.id] = _lit_values(full, a.u) * _lit_values(full, a.v)
    return full


def clamp(q: Qubo, fixed: Mapping[int, int], free: Sequence[int]) -> Qubo:
    """Restrict ``q`` to ``free`` (reindexed 0..len(free)-1 in the given order)
    with every other variable fixed; energies agree exactly."""
    free = [int(v) for v in free]
    free_set = set(free)
    if len(free_set) != len(free):
        raise ValueError("free variables must be distinct")
    if free_set & set(fixed):
        raise ValueError("fixed and free variables overlap")
    if len(free_set) + len(fixed) != q.n_total or any(not 0 <= v < q.n_total for v in free_set | set(fixed)):
        raise ValueError("fixed and free variables must cover the QUBO exactly")
    if not fixed and free == list(range(q.n_total)):
        return q
    base = np.zeros(q.n_total)
    for v, b in fixed.items():
        base[int(v)] = b
    return clamp_to(q, base, free)


def clamp_to(q: Qubo, base: np.ndarray, free: Sequence[int]) -> Qubo:
    """Clamp using the full assignment ``base``; positions in ``free`` are ignored."""
    free = np.asarray(free, dtype=np.int64)
    is_free = np.zeros(q.n_total, dtype=bool)
    is_free[free] = True
    pos = np.full(q.n_total, -1, dtype=np.int64)
    pos[free] = np.arange(len(free))
    x = np.where(is_free, 0.0, np.asarray(base, dtype=float))

    fi, fj = is_free[q.qi], is_free[q.qj]
    both = fi & fj
    neither = ~fi & ~fj
    offset = q.offset + q.linear[~is_free] @ x[~is_free] + q.qv[neither] @ (x[q.qi[neither]] * x[q.qj[neither]])
    lin = q.linear[free].copy()
    m = fi & ~fj
    np.add.at(lin, pos[q.qi[m]], q.qv[m] * x[q.qj[m]])
    m = fj & ~fi
    np.add.at(lin, pos[q.qj[m]], q.qv[m] * x[q.qi[m]])
    quad = {(int(a), int(b)): float(c)
            for a, b, c in zip(pos[q.qi[both]], pos[q.qj[both]], q.qv[both])}
    aux, origin_n = _carried_aux(q, free, is_free, pos)
    return Qubo(len(free), lin, quad, float(offset), aux=aux, origin_n=origin_n)


def _carried_aux(q: Qubo, free: np.ndarray, is_free: np.ndarray, pos: np.ndarray):
    """Auxiliary registry for a clamped QUBO, or ``((), None)``.

    It is kept when every free auxiliary has free operands and the free
    originals precede the free auxiliaries, so exact solvers can keep
    enumerating originals only.
    """
    kept = [a for a in q.aux if is_free[a.id]]
    if not kept:
        return (), None
    k = len(free) - len(kept)
    if not (np.all(free[:k] < q.origin_n) and [int(v) for v in free[k:]] == [a.id for a in kept]):
        return (), None
    if not all(is_free[a.u[0]] and is_free[a.v[0]] for a in kept):
        return (), None
    return tuple(AuxVar(int(pos[a.id]), (int(pos[a.u[0]]), a.u[1]), (int(pos[a.v[0]]), a.v[1]))
                 for a in kept), k
