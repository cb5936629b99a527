"""Depth-first search over binary variables with clause propagation.

Shared by the feature-model generator (satisfiability only) and the exact
branch-and-bound used by the epsilon-constraint baseline.
"""
from __future__ import annotations

import time
from typing import Optional, Sequence

import numpy as np

_EPS = 1e-9


class SearchLimitExceeded(RuntimeError):
    """Raised when the node or time budget runs out before optimality is proved."""


class BinarySearch:
    """Minimize a linear objective over x in {0,1}^n subject to CNF clauses
    and at most one linear side constraint.

    ``clauses`` holds tuples of ``(var, positive)`` literals. ``side`` is
    ``(coefficients, op, rhs)`` with ``op`` in ``{"<=", ">="}``. Without an
    objective the search stops at the first satisfying assignment.
    """

    def __init__(
        self,
        n: int,
        clauses: Sequence[Sequence[tuple[int, bool]]],
        objective: Optional[Sequence[float]] = None,
        side: Optional[tuple[Sequence[float], str, float]] = None,
        node_limit: Optional[int] = None,
        deadline: Optional[float] = None,
    ):
        self.n = n
        self.clauses = [tuple(c) for c in clauses]
        self.occ: list[list[int]] = [[] for _ in range(n)]
        for ci, clause in enumerate(self.clauses):
            for v, _ in clause:
                self.occ[v].append(ci)
        self.has_objective = objective is not None
        self.c = np.zeros(n) if objective is None else np.asarray(objective, dtype=float)
        if side is not None:
            coeffs, op, rhs = side
            if op not in ("<=", ">="):
                raise ValueError(f"side constraint operator must be '<=' or '>=', got {op!r}")
            self.a = np.asarray(coeffs, dtype=float)
            self.op = op
            self.rhs = float(rhs)
        else:
            self.a = None
            self.op = None
            self.rhs = 0.0
        self.node_limit = node_limit
        self.deadline = deadline
        self.nodes = 0

    # -- state ------------------------------------------------------------
    def _reset(self) -> None:
        n = self.n
        self.val = [-1] * n
        self.trail: list[int] = []
        self.n_assigned = 0
        self.lb = float(np.minimum(self.c, 0.0).sum())
        if self.a is not None:
            # bound on the side expression reachable with free variables
            if self.op == ">=":
                self.reach = float(np.maximum(self.a, 0.0).sum())
            else:
                self.reach = float(np.minimum(self.a, 0.0).sum())

    def _assign(self, v: int, b: int) -> None:
        self.val[v] = b
        self.trail.append(v)
        self.n_assigned += 1
        c = self.c[v]
        self.lb += c * b - min(c, 0.0)
        if self.a is not None:
            a = self.a[v]
            if self.op == ">=":
                self.reach += a * b - max(a, 0.0)
            else:
                self.reach += a * b - min(a, 0.0)

    def _undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            v = self.trail.pop()
            b = self.val[v]
            self.val[v] = -1
            self.n_assigned -= 1
            c = self.c[v]
            self.lb -= c * b - min(c, 0.0)
            if self.a is not None:
                a = self.a[v]
                if self.op == ">=":
                    self.reach -= a * b - max(a, 0.0)
                else:
                    self.reach -= a * b - min(a, 0.0)

    # -- propagation ------------------------------------------------------
    def _propagate_clauses(self, queue: list[int]) -> bool:
        val = self.val
        while queue:
            v = queue.pop()
            for ci in self.occ[v]:
                free_lit = None
                n_free = 0
                satisfied = False
                for u, pos in self.clauses[ci]:
                    b = val[u]
                    if b == -1:
                        n_free += 1
                        free_lit = (u, pos)
                    elif b == pos:
                        satisfied = True
                        break
                if satisfied:
                    continue
                if n_free == 0:
                    return False
                if n_free == 1:
                    u, pos = free_lit
                    self._assign(u, int(pos))
                    queue.append(u)
        return True

    def _propagate_linear(self, best: float) -> Optional[list[int]]:
        """Return newly forced variables, or None on a bound conflict."""
        forced: list[int] = []
        val = self.val
        if self.a is not None:
            if self.op == ">=":
                slack = self.reach - self.rhs
            else:
                slack = self.rhs - self.reach
            if slack < -_EPS:
                return None
            for v in range(self.n):
                if val[v] != -1:
                    continue
                a = self.a[v]
                if abs(a) > slack + _EPS:
                    # reach already assumes this value, so it is unchanged
                    if self.op == ">=":
                        b = 1 if a > 0 else 0
                    else:
                        b = 0 if a > 0 else 1
                    self._assign(v, b)
                    forced.append(v)
        if self.has_objective and best < np.inf:
            if self.lb >= best - _EPS:
                return None
            gap = best - _EPS - self.lb
            for v in range(self.n):
                if val[v] != -1:
                    continue
                c = self.c[v]
                if c != 0.0 and abs(c) >= gap:
                    b = 1 if c < 0 else 0
                    self._assign(v, b)
                    forced.append(v)
        return forced

    def _propagate(self, queue: list[int], best: float) -> bool:
        while True:
            if not self._propagate_clauses(queue):
                return False
            forced = self._propagate_linear(best)
            if forced is None:
                return False
            if not forced:
                return True
            queue = forced

    # -- search -----------------------------------------------------------
    def _pick(self) -> tuple[int, int]:
        free = [v for v in range(self.n) if self.val[v] == -1]
        if self.has_objective:
            v = max(free, key=lambda u: (abs(self.c[u]), -u))
            return v, (1 if self.c[v] < 0 else 0)
        return free[0], 0

    def _tick(self) -> None:
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise SearchLimitExceeded(f"node budget of {self.node_limit} exhausted")
        if self.deadline is not None and (self.nodes & 255) == 0 and time.monotonic() > self.deadline:
            raise SearchLimitExceeded("time budget exhausted")

    def solve(self) -> tuple[Optional[np.ndarray], float]:
        """Return ``(assignment, objective)`` or ``(None, inf)`` if infeasible."""
        self._reset()
        best = np.inf
        best_x: Optional[np.ndarray] = None

        # unit clauses and empty clauses
        queue: list[int] = []
        for clause in self.clauses:
            if not clause:
                return None, np.inf
            if len(clause) == 1:
                u, pos = clause[0]
                if self.val[u] == -1:
                    self._assign(u, int(pos))
                    queue.append(u)
                elif self.val[u] != int(pos):
                    return None, np.inf
        # clause check for variables fixed by units happens in propagation
        if not self._propagate(queue, best):
            return None, np.inf

        stack: list[list] = []  # [var, alternative value or None, trail mark]
        ok = True
        while True:
            if ok:
                if self.n_assigned == self.n:
                    x = np.array(self.val, dtype=np.int8)
                    value = float(self.c @ x) if self.has_objective else 0.0
                    if value < best - _EPS or best_x is None:
                        best, best_x = value, x
                    if not self.has_objective:
                        return best_x, best
                    ok = False
                elif self.has_objective and self.lb >= best - _EPS:
                    ok = False
                else:
                    self._tick()
                    v, b = self._pick()
                    stack.append([v, 1 - b, len(self.trail)])
                    self._assign(v, b)
                    ok = self._propagate([v], best)
                    continue
            # backtrack
            while stack and stack[-1][1] is None:
                self._undo_to(stack.pop()[2])
            if not stack:
                return best_x, best
            frame = stack[-1]
            self._undo_to(frame[2])
            v, b = frame[0], frame[1]
            frame[1] = None
            self._tick()
            self._assign(v, b)
            ok = self._propagate([v], best)
