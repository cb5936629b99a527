"""Samplers standing in for the quantum annealer.

Every sampler returns distinct assignments sorted by ascending energy, each
with its occurrence count. Energies are always recomputed with
:meth:`Qubo.energy` so they match re-evaluation exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numba
import numpy as np
import requests

from .qubo import Qubo, complete_auxiliaries

log = logging.getLogger(__name__)

SAMPLER_KINDS = ("simulated_annealing", "exact", "steepest_descent", "remote")
EXACT_MAX_VARIABLES = 22
_CHUNK = 1 << 16


class SamplerError(RuntimeError):
    pass


class SamplerCapabilityError(SamplerError):
    """The sampler cannot handle a QUBO of this size."""


class TransportError(SamplerError):
    pass


class ProtocolError(SamplerError):
    pass


@dataclass
class Sample:
    assignment: np.ndarray
    energy: float
    occurrences: int = 1

    def key(self) -> bytes:
        return self.assignment.tobytes()


@dataclass(frozen=True)
class SamplerSpec:
    kind: str = "simulated_annealing"
    reads: int = 1
    sweeps: int = 1000
    beta_range: Optional[tuple[float, float]] = None
    seed: int = 0
    endpoint: Optional[str] = None
    timeout_ms: int = 30000

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; expected one of {SAMPLER_KINDS}")
        if self.reads < 1:
            raise ValueError("reads must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.beta_range is not None:
            lo, hi = self.beta_range
            if not 0 < lo < hi:
                raise ValueError("beta_range must satisfy 0 < beta_min < beta_max")
            object.__setattr__(self, "beta_range", (float(lo), float(hi)))
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote sampler needs an endpoint")

    def derive(self, *keys: int) -> "SamplerSpec":
        """Copy with a seed derived from ``(seed, *keys)``."""
        return replace(self, seed=derive_seed(self.seed, *keys))


def derive_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


def sample(q: Qubo, spec: SamplerSpec) -> list[Sample]:
    if q.n_total == 0:
        raise ValueError("cannot sample an empty QUBO")
    if spec.kind == "exact":
        return exact_sample(q, spec.reads)
    if spec.kind == "simulated_annealing":
        return anneal(q, spec.reads, spec.sweeps, spec.beta_range, spec.seed)
    if spec.kind == "steepest_descent":
        return descend_from_random(q, spec.reads, spec.seed)
    return remote_sample(q, spec)


def _finalize(q: Qubo, X: np.ndarray, limit: Optional[int] = None) -> list[Sample]:
    X = np.ascontiguousarray(X, dtype=np.int8)
    uniq, counts = np.unique(X, axis=0, return_counts=True)
    samples = [Sample(row.copy(), q.energy(row), int(c)) for row, c in zip(uniq, counts)]
    samples.sort(key=lambda s: (s.energy, s.key()))
    return samples[:limit] if limit is not None else samples


# -- exact ----------------------------------------------------------------

def exact_sample(q: Qubo, reads: int = 1) -> list[Sample]:
    """The ``reads`` lowest-energy distinct assignments.

    Auxiliary variables are set to their energy-minimizing values rather than
    enumerated, so the enumeration runs over the original variables only.
    """
    n = q.origin_n
    if n > EXACT_MAX_VARIABLES:
        raise SamplerCapabilityError(
            f"exact sampler handles at most {EXACT_MAX_VARIABLES} variables, got {n}")
    shifts = np.arange(n, dtype=np.int64)
    best_e = np.empty(0)
    best_idx = np.empty(0, dtype=np.int64)
    total = 1 << n
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        X = ((idx[:, None] >> shifts) & 1).astype(np.int8)
        e = q.energies(complete_auxiliaries(q, X))
        cand_e = np.concatenate([best_e, e])
        cand_i = np.concatenate([best_idx, idx])
        keep = np.lexsort((cand_i, cand_e))[:reads]
        best_e, best_idx = cand_e[keep], cand_i[keep]
    X = ((best_idx[:, None] >> shifts) & 1).astype(np.int8)
    return _finalize(q, complete_auxiliaries(q, X))


# -- simulated annealing --------------------------------------------------

@numba.njit(cache=True)
def _anneal_one(indptr, indices, data, linear, betas, seed):
    np.random.seed(seed)
    n = linear.shape[0]
    x = np.zeros(n, dtype=np.int8)
    for i in range(n):
        if np.random.random() < 0.5:
            x[i] = 1
    h = linear.copy()
    for i in range(n):
        if x[i] == 1:
            for k in range(indptr[i], indptr[i + 1]):
                h[indices[k]] += data[k]
    for beta in betas:
        for i in range(n):
            d = h[i] if x[i] == 0 else -h[i]
            # uphill moves with probability below e^-40 are skipped without a draw
            if d <= 0.0 or (beta * d < 40.0 and np.random.random() < np.exp(-beta * d)):
                s = 1 - 2 * x[i]
                x[i] += s
                for k in range(indptr[i], indptr[i + 1]):
                    h[indices[k]] += s * data[k]
    return x


def default_beta_range(q: Qubo) -> tuple[float, float]:
    """``(0.1 / max|c|, 10 / min nonzero |c|)`` over all coefficients."""
    mags = np.abs(np.concatenate([q.linear, q.qv]))
    top = mags.max() if mags.size else 0.0
    if top == 0.0:
        return 0.1, 10.0
    nz = mags[mags > 1e-12 * top]
    lo, hi = 0.1 / top, 10.0 / nz.min()
    return (lo, hi) if hi > lo else (lo, lo * 100.0)


def anneal(q: Qubo, reads: int, sweeps: int = 1000,
           beta_range: Optional[tuple[float, float]] = None, seed: int = 0) -> list[Sample]:
    """``reads`` independent Metropolis chains on a geometric inverse-temperature
    schedule; read ``k`` draws from the substream ``(seed, k)``."""
    lo, hi = beta_range or default_beta_range(q)
    betas = np.geomspace(lo, hi, sweeps)
    indptr, indices, data = q.adjacency
    X = np.empty((reads, q.n_total), dtype=np.int8)
    for k in range(reads):
        X[k] = _anneal_one(indptr, indices, data, q.linear, betas, derive_seed(seed, k) & 0xFFFFFFFF)
    return _finalize(q, X, reads)


# -- steepest descent -----------------------------------------------------

_DESCENT_TOL = 1e-12


def steepest_descent(q: Qubo, start: Sequence[int]) -> Sample:
    """Flip the single bit with the largest strict energy decrease until no
    flip improves; ties go to the lowest index."""
    x = np.array(start, dtype=np.int8)
    if x.shape != (q.n_total,):
        raise ValueError(f"start has length {x.size}, QUBO has {q.n_total} variables")
    indptr, indices, data = q.adjacency
    while True:
        # fresh fields each round shed accumulated rounding before declaring a minimum
        h = q.local_fields(x)
        moved = False
        while True:
            delta = np.where(x == 0, h, -h)
            i = int(np.argmin(delta))
            if delta[i] >= -_DESCENT_TOL:
                break
            s = 1 - 2 * int(x[i])
            x[i] += s
            sl = slice(indptr[i], indptr[i + 1])
            h[indices[sl]] += s * data[sl]
            moved = True
        if not moved:
            break
    return Sample(x, q.energy(x), 1)


def descend_from_random(q: Qubo, reads: int, seed: int = 0) -> list[Sample]:
    X = np.empty((reads, q.n_total), dtype=np.int8)
    for k in range(reads):
        rng = np.random.default_rng([seed, k])
        X[k] = steepest_descent(q, rng.integers(0, 2, q.n_total)).assignment
    return _finalize(q, X, reads)


# -- remote ---------------------------------------------------------------

def remote_sample(q: Qubo, spec: SamplerSpec) -> list[Sample]:
    """POST the QUBO to ``spec.endpoint`` and validate the returned samples."""
    if not spec.endpoint:
        raise ValueError("remote sampler needs an endpoint")
    payload = dict(q.to_json(), num_reads=spec.reads)
    try:
        resp = requests.post(spec.endpoint, json=payload, timeout=spec.timeout_ms / 1000.0)
        resp.raise_for_status()
        body = resp.json()
    except requests.RequestException as exc:
        raise TransportError(f"remote sampler at {spec.endpoint} failed: {exc}") from exc
    except ValueError as exc:
        raise ProtocolError(f"remote sampler returned invalid JSON: {exc}") from exc

    if not isinstance(body, dict) or not isinstance(body.get("samples"), list):
        raise ProtocolError("response must be an object with a 'samples' list")
    out: list[Sample] = []
    for k, item in enumerate(body["samples"]):
        if not isinstance(item, dict) or "assignment" not in item:
            raise ProtocolError(f"sample {k} lacks an assignment")
        a = item["assignment"]
        if not isinstance(a, list) or len(a) != q.n_total:
            raise ProtocolError(
                f"sample {k} has {len(a) if isinstance(a, list) else '?'} bits, expected {q.n_total}")
        if any(v not in (0, 1) or isinstance(v, bool) for v in a):
            raise ProtocolError(f"sample {k} contains non-binary values")
        occ = item.get("occurrences", 1)
        if not isinstance(occ, int) or isinstance(occ, bool) or occ < 1:
            raise ProtocolError(f"sample {k} has invalid occurrences {occ!r}")
        claimed = item.get("energy")
        if claimed is not None and not isinstance(claimed, (int, float)):
            raise ProtocolError(f"sample {k} has non-numeric energy")
        x = np.array(a, dtype=np.int8)
        e = q.energy(x)
        if claimed is None or abs(claimed - e) > 1e-9 * max(1.0, abs(e)):
            log.warning("remote sample %d energy %r disagrees with local %r; using local", k, claimed, e)
        out.append(Sample(x, e, occ))
    merged: dict[bytes, Sample] = {}
    for s in out:
        if s.key() in merged:
            merged[s.key()].occurrences += s.occurrences
        else:
            merged[s.key()] = s
    return sorted(merged.values(), key=lambda s: (s.energy, s.key()))
