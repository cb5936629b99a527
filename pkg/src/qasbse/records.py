"""Run records: one JSON document per solver run, self-validating against
the embedded instance."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .indicators import ParetoArchive
from .instances import ProblemInstance, evaluate_batch

SCHEMA = "qasbse.run/1"


class RecordError(ValueError):
    """Malformed record or archive that does not re-evaluate to its stored objectives."""


def instance_hash(instance: ProblemInstance) -> str:
    """SHA-256 of the canonical (sorted, compact) instance JSON."""
    return hashlib.sha256(instance.dumps().encode()).hexdigest()


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


@dataclass
class RunRecord:
    method: str
    instance: ProblemInstance
    config: dict
    seed: int
    repeat: int
    wall_time_s: float
    archive: ParetoArchive
    timings: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)

    @property
    def instance_sha256(self) -> str:
        return instance_hash(self.instance)

    def validate(self) -> None:
        """Raise :class:`RecordError` unless every archived assignment
        re-evaluates to its stored objective vector and is feasible."""
        if self.archive.senses != self.instance.senses:
            raise RecordError("archive senses differ from the instance")
        if not len(self.archive):
            return
        X = np.array([s.assignment for s in self.archive], dtype=np.int8)
        if X.shape[1] != self.instance.n:
            raise RecordError(f"assignments have {X.shape[1]} variables, instance has {self.instance.n}")
        objs, viol = evaluate_batch(self.instance, X)
        if np.any(viol):
            raise RecordError("archive contains an infeasible assignment")
        if not np.array_equal(objs, self.archive.objectives):
            raise RecordError("archived objective vectors do not match re-evaluation")

    def to_json(self) -> dict:
        return _jsonable({
            "schema": SCHEMA,
            "method": self.method,
            "instance": {"name": self.instance.name, "sha256": self.instance_sha256,
                         "data": self.instance.to_json()},
            "config": self.config,
            "seed": self.seed,
            "repeat": self.repeat,
            "wall_time_s": self.wall_time_s,
            "archive": self.archive.to_json(),
            "timings": self.timings,
            "trace": self.trace,
        })

    @classmethod
    def from_json(cls, d: dict) -> "RunRecord":
        if d.get("schema") != SCHEMA:
            raise RecordError(f"unsupported record schema {d.get('schema')!r}")
        try:
            inst = ProblemInstance.from_json(d["instance"]["data"])
            rec = cls(method=d["method"], instance=inst, config=d["config"], seed=int(d["seed"]),
                      repeat=int(d["repeat"]), wall_time_s=float(d["wall_time_s"]),
                      archive=ParetoArchive.from_json(d["archive"]), timings=d.get("timings", {}),
                      trace=d.get("trace", {}))
        except (KeyError, TypeError) as exc:
            raise RecordError(f"malformed run record: {exc!r}") from None
        if d["instance"]["sha256"] != rec.instance_sha256:
            raise RecordError("instance content does not match its recorded hash")
        rec.validate()
        return rec

    @classmethod
    def load(cls, path) -> "RunRecord":
        try:
            return cls.from_json(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise RecordError(f"{path}: not valid JSON ({exc})") from None


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"
