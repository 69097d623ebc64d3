"""Scenario files: strict YAML loading, defaults and whole-scenario validation.

Every key is optional and falls back to the dataclass default; unknown keys
are rejected with their dotted path. Per-channel world parameters take a
scalar or a list with one value per channel.
"""

from __future__ import annotations

import logging
import math
import types
import typing
from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ScenarioError
from .fitness import TrueFitnessConfig
from .genome import EvolveFlags, ModulationParams
from .world import ChannelParams, WorldConfig

log = logging.getLogger(__name__)

VARIANTS = ("gloop", "fixed", "gest")


@dataclass(frozen=True)
class EstimatorConfig:
    sensor_noise: float = 0.05
    support_threshold: float | None = None
    crowding_sensor: bool = False
    window: int = 200


@dataclass(frozen=True)
class ModulationConfig:
    c_gen: float = 0.001
    c_learn: float = 0.001
    sigma_min: float = 0.01
    sigma_max: float = 0.5
    epsilon: float = 1e-6
    learn_traits: tuple | None = None
    evolve: EvolveFlags = field(default_factory=EvolveFlags)

    @property
    def params(self) -> ModulationParams:
        return ModulationParams(self.c_gen, self.c_learn, self.sigma_min, self.sigma_max, self.epsilon)


@dataclass(frozen=True)
class FounderConfig:
    traits: tuple | None = None
    est_weights: tuple | None = None
    est_width: float | None = None
    symbol_weights: tuple | None = None
    symbol_threshold: float = 0.0


@dataclass(frozen=True)
class PopulationConfig:
    n0: int = 50
    sigma_init: float = 0.0
    steps: int = 2000
    hard_cap: int | None = None
    founder: FounderConfig = field(default_factory=FounderConfig)


@dataclass(frozen=True)
class VariantConfig:
    kind: str = "gloop"
    sigma: float = 0.05
    coupling: float | None = None
    reference_weight: float = 1.0
    target: float = 0.0
    goal_width: float = 0.5
    goal_trait: int = 0
    isolated: bool = True


@dataclass(frozen=True)
class SymbolConfig:
    enabled: bool = False
    align_rate: float = 0.2
    prune: float = 0.02
    rounds_per_step: int = 0
    evade_step: float = 0.0
    exposure_baseline: float = 0.0
    init_scale: float = 0.0
    eval_agents: int = 32
    eval_contexts: int = 16
    context_pool: int = 64
    context_spacing: int = 10
    utility_lag: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    seeds: int = 50
    first_seed: int = 0
    sigma_grid: tuple = (0.01, 0.02, 0.05, 0.1, 0.2)
    lambda_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    rounds: int = 500
    summary_start: float = 0.5

    @property
    def seed_list(self) -> list[int]:
        return list(range(self.first_seed, self.first_seed + self.seeds))


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    plot: bool = True


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    world: WorldConfig = field(default_factory=WorldConfig)
    fitness: TrueFitnessConfig = field(default_factory=TrueFitnessConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    modulation: ModulationConfig = field(default_factory=ModulationConfig)
    population: PopulationConfig = field(default_factory=PopulationConfig)
    variant: VariantConfig = field(default_factory=VariantConfig)
    symbols: SymbolConfig = field(default_factory=SymbolConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def hard_cap(self) -> float:
        if self.population.hard_cap is not None:
            return self.population.hard_cap
        return 10 * self.fitness.capacity

    @property
    def support_threshold(self) -> float:
        if self.estimator.support_threshold is not None:
            return self.estimator.support_threshold
        return 0.05 * max(self.fitness.true_weights)

    @property
    def evolve_flags(self) -> EvolveFlags:
        flags = self.modulation.evolve
        if self.variant.kind == "gest":
            flags = replace(flags, goal=not self.variant.isolated)
        return flags

    def with_variant(self, **changes) -> "Scenario":
        return replace(self, variant=replace(self.variant, **changes))

    def with_steps(self, steps: int) -> "Scenario":
        return replace(self, population=replace(self.population, steps=steps))


# --------------------------------------------------------------------------- loading


def _strip_optional(tp):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return args, type(None) in typing.get_args(tp)
    return [tp], False


def _coerce(value, tp, path: str):
    options, nullable = _strip_optional(tp)
    if value is None:
        if nullable:
            return None
        raise ScenarioError("may not be null", path)
    for opt in options:
        if is_dataclass(opt):
            if not isinstance(value, dict):
                raise ScenarioError(f"expected a mapping, got {type(value).__name__}", path)
            return _build(opt, value, path)
    if tuple in options or any(typing.get_origin(o) is tuple for o in options):
        if isinstance(value, (list, tuple)):
            try:
                return tuple(float(v) if not isinstance(v, bool) else v for v in value)
            except (TypeError, ValueError):
                raise ScenarioError("expected a list of numbers", path) from None
        if float in options and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ScenarioError(f"expected a list, got {type(value).__name__}", path)
    if bool in options:
        if not isinstance(value, bool):
            raise ScenarioError(f"expected true/false, got {value!r}", path)
        return value
    if int in options:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
            raise ScenarioError(f"expected an integer, got {value!r}", path)
        return int(value)
    if float in options:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            if isinstance(value, str):
                try:
                    return float(value)
                except ValueError:
                    pass
            raise ScenarioError(f"expected a number, got {value!r}", path)
        return float(value)
    if str in options:
        if not isinstance(value, str):
            raise ScenarioError(f"expected a string, got {value!r}", path)
        return value
    raise ScenarioError(f"unsupported field type {tp}", path)


def _build(cls, data: dict, prefix: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if key not in names:
            raise ScenarioError("unknown key", path)
        kwargs[key] = _coerce(value, hints[key], path)
    return cls(**kwargs)


def scenario_from_dict(data: dict | None, name: str = "scenario") -> Scenario:
    data = dict(data or {})
    data.setdefault("name", name)
    sc = _build(Scenario, data)
    validate_scenario(sc)
    return apply_coupling(sc, sc.variant.coupling) if sc.variant.coupling is not None else sc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"parse error in {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return scenario_from_dict(data, name=path.stem)


def scenario_to_dict(sc: Scenario) -> dict:
    def conv(x):
        if is_dataclass(x):
            return {f.name: conv(getattr(x, f.name)) for f in fields(x)}
        if isinstance(x, tuple):
            return [conv(v) for v in x]
        return x

    return conv(sc)


def apply_coupling(sc: Scenario, coupling: float) -> Scenario:
    """Set the goal trait's true weight to ``coupling * reference_weight``."""
    k = sc.variant.goal_trait
    u = list(sc.fitness.true_weights)
    u[k] = coupling * sc.variant.reference_weight
    out = replace(sc, fitness=replace(sc.fitness, true_weights=tuple(u)), variant=replace(sc.variant, coupling=coupling))
    if not any(w > 0 for w in u):
        raise ScenarioError("coupling leaves no positive true weight", "variant.coupling")
    return out


# --------------------------------------------------------------------------- validation


def _check(cond: bool, field_path: str, message: str):
    if not cond:
        raise ScenarioError(message, field_path)


def _per_channel(value, m: int, path: str, lo=None, hi=None):
    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    _check(arr.size in (1, m), path, f"expected a scalar or {m} values, got {arr.size}")
    _check(bool(np.all(np.isfinite(arr))), path, "values must be finite")
    if lo is not None:
        _check(bool(np.all(arr >= lo)), path, f"values must be >= {lo}")
    if hi is not None:
        _check(bool(np.all(arr <= hi)), path, f"values must be <= {hi}")


def validate_scenario(sc: Scenario) -> None:
    w = sc.world
    _check(w.m_e >= 1, "world.m_e", "must be >= 1")
    _check(w.m_i >= 0, "world.m_i", "must be >= 0")
    for name, lo, hi in (
        ("reversion_rate", 0.0, None),
        ("long_run_means", None, None),
        ("diffusion", 0.0, None),
        ("jump_prob", 0.0, 1.0),
        ("jump_range", 1e-300, None),
    ):
        _per_channel(getattr(w, name), w.m_e, f"world.{name}", lo, hi)
        irr = getattr(w.irrelevant, name)
        if irr is not None:
            _per_channel(irr, w.m_i, f"world.irrelevant.{name}", lo, hi)
        elif not np.isscalar(getattr(w, name)):
            _check(w.m_e == w.m_i, f"world.irrelevant.{name}", "must be given when world." + name + " is per-channel")
    _check(0 <= w.hazard_index < w.m_e, "world.hazard_index", f"must be in [0, {w.m_e})")
    _check(w.dt > 0, "world.dt", "must be > 0")
    _check(w.hazard_lead >= 0, "world.hazard_lead", "must be >= 0")
    _check(w.context_noise >= 0, "world.context_noise", "must be >= 0")

    f = sc.fitness
    _check(f.r_max > 0, "fitness.r_max", "must be > 0")
    _check(len(f.true_weights) == w.m_e, "fitness.true_weights", f"needs one weight per relevant channel ({w.m_e})")
    _check(all(u >= 0 and math.isfinite(u) for u in f.true_weights), "fitness.true_weights", "weights must be finite and >= 0")
    _check(any(u > 0 for u in f.true_weights), "fitness.true_weights", "at least one weight must be > 0")
    _check(f.width > 0, "fitness.width", "must be > 0")
    _check(f.capacity >= 1, "fitness.capacity", "must be >= 1")
    _check(f.death_rate >= 0, "fitness.death_rate", "must be >= 0")
    _check(0 <= f.hazard_penalty <= 1, "fitness.hazard_penalty", "must be in [0, 1]")

    e = sc.estimator
    _check(e.sensor_noise >= 0, "estimator.sensor_noise", "must be >= 0")
    _check(e.support_threshold is None or e.support_threshold > 0, "estimator.support_threshold", "must be > 0")
    _check(e.window >= 2, "estimator.window", "must be >= 2")

    m = sc.modulation
    _check(m.c_gen >= 0, "modulation.c_gen", "must be >= 0")
    _check(m.c_learn >= 0, "modulation.c_learn", "must be >= 0")
    _check(m.sigma_min >= 0, "modulation.sigma_min", "must be >= 0")
    _check(m.sigma_max >= m.sigma_min, "modulation.sigma_max", "must be >= sigma_min")
    _check(m.epsilon > 0, "modulation.epsilon", "must be > 0")
    n_traits = w.m_e + w.m_i + 1
    if m.learn_traits is not None:
        _check(
            all(float(i).is_integer() and 0 <= i < n_traits for i in m.learn_traits),
            "modulation.learn_traits",
            f"indices must be integers in [0, {n_traits})",
        )

    p = sc.population
    _check(p.n0 >= 1, "population.n0", "must be >= 1")
    _check(p.sigma_init >= 0, "population.sigma_init", "must be >= 0")
    _check(p.steps >= 0, "population.steps", "must be >= 0")
    _check(p.hard_cap is None or p.hard_cap >= p.n0, "population.hard_cap", "must be >= n0")
    fd = p.founder
    if fd.traits is not None:
        _check(len(fd.traits) == n_traits, "population.founder.traits", f"needs {n_traits} values")
    if fd.est_weights is not None:
        _check(len(fd.est_weights) == w.n_channels, "population.founder.est_weights", f"needs {w.n_channels} values")
        _check(all(v >= 0 for v in fd.est_weights), "population.founder.est_weights", "weights must be >= 0")
    if fd.est_width is not None:
        _check(fd.est_width > 0, "population.founder.est_width", "must be > 0")
    if fd.symbol_weights is not None:
        _check(len(fd.symbol_weights) == w.n_channels, "population.founder.symbol_weights", f"needs {w.n_channels} values")

    v = sc.variant
    _check(v.kind in VARIANTS, "variant.kind", f"must be one of {', '.join(VARIANTS)}")
    _check(v.sigma >= 0, "variant.sigma", "must be >= 0")
    _check(0 <= v.goal_trait < w.m_e, "variant.goal_trait", f"must be in [0, {w.m_e})")
    _check(v.goal_width > 0, "variant.goal_width", "must be > 0")
    _check(v.reference_weight >= 0, "variant.reference_weight", "must be >= 0")
    _check(v.coupling is None or 0 <= v.coupling <= 1, "variant.coupling", "must be in [0, 1]")

    s = sc.symbols
    _check(0 <= s.align_rate <= 1, "symbols.align_rate", "must be in [0, 1]")
    _check(s.prune >= 0, "symbols.prune", "must be >= 0")
    _check(s.rounds_per_step >= 0, "symbols.rounds_per_step", "must be >= 0")
    _check(s.evade_step >= 0, "symbols.evade_step", "must be >= 0")
    _check(s.init_scale >= 0, "symbols.init_scale", "must be >= 0")
    _check(s.eval_agents >= 2, "symbols.eval_agents", "must be >= 2")
    _check(s.eval_contexts >= 1, "symbols.eval_contexts", "must be >= 1")
    _check(s.context_pool >= 1, "symbols.context_pool", "must be >= 1")
    _check(s.context_spacing >= 1, "symbols.context_spacing", "must be >= 1")
    _check(s.utility_lag >= 1, "symbols.utility_lag", "must be >= 1")

    x = sc.experiment
    _check(x.seeds >= 1, "experiment.seeds", "must be >= 1")
    _check(len(x.sigma_grid) >= 1 and all(g >= 0 for g in x.sigma_grid), "experiment.sigma_grid", "needs non-negative values")
    _check(all(0 <= g <= 1 for g in x.lambda_grid), "experiment.lambda_grid", "values must be in [0, 1]")
    _check(x.rounds >= 0, "experiment.rounds", "must be >= 0")
    _check(0 <= x.summary_start < 1, "experiment.summary_start", "must be in [0, 1)")

    if f.r_max * w.dt > 0.5:
        log.warning("r_max * dt = %.3g > 0.5: Bernoulli births under-represent the rate", f.r_max * w.dt)


# --------------------------------------------------------------------------- bundled files

SCENARIO_DIR = Path(__file__).with_name("scenarios")


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))


def resolve_scenario_path(name_or_path) -> Path:
    """A file path as given, or the bundled scenario of that name."""
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = SCENARIO_DIR / f"{path.stem}.yaml"
    if path.suffix in ("", ".yaml") and path.parent == Path(".") and bundled.exists():
        return bundled
    raise ScenarioError(f"no scenario file or bundled scenario named {name_or_path!r}")


def bundled(name: str) -> Scenario:
    return load_scenario(resolve_scenario_path(name))
