"""Flat ``key = value`` run configuration.

Precedence, lowest first: built-in defaults, config file, ``QASBSE_*``
environment variables, explicit command-line values. The environment name of
a key is its upper-cased form with dots replaced by underscores, e.g.
``sampler.sweeps`` -> ``QASBSE_SAMPLER_SWEEPS``.
"""
from __future__ import annotations

import os
from typing import Any, Callable, Mapping, Optional

from .baselines import EpsilonConfig, Nsga2Config
from .cqha import CqhaConfig
from .moqa import MoqaConfig
from .qubo import QuboBuildConfig
from .samplers import SamplerSpec

ENV_PREFIX = "QASBSE_"


class ConfigError(ValueError):
    """Unknown key or unparseable value."""


def _opt(cast: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(text: str):
        return None if text.strip().lower() in ("", "none", "null") else cast(text)
    return parse


# key -> (parser, default, help)
KEYS: dict[str, tuple[Callable[[str], Any], Any, str]] = {
    "seed": (int, 0, "base seed; repeat r uses seed + r"),
    "repeats": (int, 1, "independent runs per solve"),
    "jobs": (int, 1, "runs executed concurrently"),
    "time_budget": (_opt(float), None, "per-run wall-time budget in seconds"),
    "weights": (int, 10, "weight vectors for moqa/cqha"),
    "reads": (_opt(int), None, "reads per (sub-)QUBO; default 500 for moqa, 100 for cqha"),
    "sampler.kind": (str, "simulated_annealing", "simulated_annealing | exact | steepest_descent | remote"),
    "sampler.sweeps": (int, 1000, "annealing sweeps per read"),
    "sampler.beta_min": (_opt(float), None, "initial inverse temperature (auto when unset)"),
    "sampler.beta_max": (_opt(float), None, "final inverse temperature (auto when unset)"),
    "remote.endpoint": (_opt(str), None, "HTTP endpoint for the remote sampler"),
    "remote.timeout_ms": (int, 30000, "remote sampler request timeout"),
    "build.penalty": (float, 2.0, "constraint penalty weight P"),
    "build.rosenberg_penalty": (_opt(float), None, "auxiliary reification weight (default 2P)"),
    "cqha.sub_size": (int, 150, "maximum sub-QUBO size s"),
    "cqha.rate": (float, 1.0, "fraction of sub-QUBOs solved per pass"),
    "cqha.max_loops": (int, 10, "maximum decompose-solve passes per weight"),
    "cqha.impact": (str, "total", "energy-impact strategy: total | linear"),
    "nsga2.population": (int, 100, "population size (even, >= 4)"),
    "nsga2.evaluations": (int, 20000, "evaluation budget"),
    "nsga2.crossover_prob": (float, 0.8, "crossover probability"),
    "nsga2.mutation_prob": (_opt(float), None, "per-bit mutation probability (default 1/n)"),
    "nsga2.crossover": (str, "uniform", "uniform | single_point"),
    "eps.optimized": (int, 0, "index of the minimized objective"),
    "eps.constrained": (int, 1, "index of the bounded objective"),
    "eps.step": (_opt(float), None, "bound step (default 1 for integer objectives)"),
    "eps.node_limit": (_opt(int), 5_000_000, "branch-and-bound node budget per solve"),
}


def env_name(key: str) -> str:
    return ENV_PREFIX + key.upper().replace(".", "_")


def parse_value(key: str, text: str) -> Any:
    if key not in KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return KEYS[key][0](text.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            out[key] = parse_value(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return out


def resolve(file_text: Optional[str] = None, env: Optional[Mapping[str, str]] = None,
            overrides: Optional[Mapping[str, Any]] = None, source: str = "<config>") -> dict[str, Any]:
    """Merge defaults, file, environment and overrides into one flat dict."""
    cfg = {k: spec[1] for k, spec in KEYS.items()}
    if file_text is not None:
        cfg.update(parse_config_text(file_text, source))
    env = os.environ if env is None else env
    for key in KEYS:
        name = env_name(key)
        if name in env:
            cfg[key] = parse_value(key, env[name])
    for key, value in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if value is not None:
            cfg[key] = value
    return cfg


def sampler_spec(cfg: Mapping[str, Any], seed: int) -> SamplerSpec:
    lo, hi = cfg["sampler.beta_min"], cfg["sampler.beta_max"]
    if (lo is None) != (hi is None):
        raise ConfigError("set both sampler.beta_min and sampler.beta_max or neither")
    return SamplerSpec(kind=cfg["sampler.kind"], sweeps=cfg["sampler.sweeps"],
                       beta_range=None if lo is None else (lo, hi), seed=seed,
                       endpoint=cfg["remote.endpoint"], timeout_ms=cfg["remote.timeout_ms"])


def method_config(method: str, cfg: Mapping[str, Any], seed: int):
    """Typed solver config for ``method`` from a resolved flat dict."""
    try:
        build = QuboBuildConfig(penalty=cfg["build.penalty"], rosenberg_penalty=cfg["build.rosenberg_penalty"])
        budget = cfg["time_budget"]
        if method == "moqa":
            return MoqaConfig(n_weights=cfg["weights"], reads=cfg["reads"] or 500,
                              sampler=sampler_spec(cfg, seed), build=build, seed=seed, time_budget=budget)
        if method == "cqha":
            return CqhaConfig(n_weights=cfg["weights"], reads=cfg["reads"] or 100,
                              sub_size=cfg["cqha.sub_size"], rate=cfg["cqha.rate"],
                              max_loops=cfg["cqha.max_loops"], sampler=sampler_spec(cfg, seed),
                              build=build, seed=seed, impact=cfg["cqha.impact"], time_budget=budget)
        if method == "nsga2":
            return Nsga2Config(population_size=cfg["nsga2.population"],
                               max_evaluations=cfg["nsga2.evaluations"],
                               crossover_prob=cfg["nsga2.crossover_prob"],
                               mutation_prob=cfg["nsga2.mutation_prob"], seed=seed,
                               crossover=cfg["nsga2.crossover"], time_budget=budget)
        if method == "eps":
            return EpsilonConfig(optimized=cfg["eps.optimized"], constrained=cfg["eps.constrained"],
                                 step=cfg["eps.step"], node_limit=cfg["eps.node_limit"], time_budget=budget)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown method {method!r}")
