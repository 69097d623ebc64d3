"""Heritable agent structure and its flat-vector layout.

The population engine stores genomes as rows of one float matrix. The
:class:`GenomeLayout` says which columns hold which field; :class:`Genome`
is the structured view of a single row.

Trait layout for ``m_e`` relevant and ``m_i`` irrelevant channels::

    traits[0 : m_e]            tracking traits, paired with relevant channels
    traits[m_e : m_e + m_i]    spare traits, paired with irrelevant channels
    traits[m_e + m_i]          exposure trait (hazard gating)

so sensed channel ``j`` always pairs with trait ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from functools import cached_property

import numpy as np

MIN_WIDTH = 1e-6
MIN_EPSILON = 1e-12


@dataclass(frozen=True)
class ModulationParams:
    c_gen: float = 0.001
    c_learn: float = 0.001
    sigma_min: float = 0.01
    sigma_max: float = 0.5
    epsilon: float = 1e-6

    def as_array(self) -> np.ndarray:
        return np.array([self.c_gen, self.c_learn, self.sigma_min, self.sigma_max, self.epsilon])


@dataclass(frozen=True)
class GoalParams:
    """Substitute goal: high when trait ``trait_index`` is near ``target``."""

    target: float = 0.0
    width: float = 0.5
    trait_index: int = 0


@dataclass(frozen=True)
class EvolveFlags:
    """Which genome blocks mutate at reproduction."""

    traits: bool = True
    est_weights: bool = True
    est_width: bool = True
    modulation: bool = True
    symbols: bool = True
    goal: bool = True

    @classmethod
    def none(cls) -> "EvolveFlags":
        return cls(**{f.name: False for f in fields(cls)})


@dataclass(frozen=True)
class GenomeLayout:
    n_channels: int

    @property
    def n_traits(self) -> int:
        return self.n_channels + 1

    @property
    def exposure_index(self) -> int:
        return self.n_channels

    @cached_property
    def slices(self) -> dict[str, slice]:
        nt, ns = self.n_traits, self.n_channels
        o = 0
        out = {}
        for name, size in (
            ("traits", nt),
            ("est_weights", ns),
            ("est_width", 1),
            ("modulation", 5),
            ("symbol_weights", ns),
            ("symbol_threshold", 1),
            ("goal", 2),
        ):
            out[name] = slice(o, o + size)
            o += size
        return out

    @property
    def length(self) -> int:
        return self.slices["goal"].stop

    def col(self, name: str) -> int:
        """Column index of a single-valued field."""
        return self.slices[name].start

    @property
    def mod_cols(self) -> tuple[int, int, int, int, int]:
        s = self.slices["modulation"].start
        return s, s + 1, s + 2, s + 3, s + 4

    def evolve_mask(self, flags: EvolveFlags) -> np.ndarray:
        mask = np.zeros(self.length, dtype=bool)
        blocks = {
            "traits": flags.traits,
            "est_weights": flags.est_weights,
            "est_width": flags.est_width,
            "modulation": flags.modulation,
            "symbol_weights": flags.symbols,
            "symbol_threshold": flags.symbols,
            "goal": flags.goal,
        }
        for name, on in blocks.items():
            mask[self.slices[name]] = on
        return mask

    def clamp_rows(self, rows: np.ndarray) -> np.ndarray:
        """Project rows onto the valid genome set (in place, also returned)."""
        s = self.slices
        np.maximum(rows[:, s["est_weights"]], 0.0, out=rows[:, s["est_weights"]])
        w = self.col("est_width")
        rows[:, w] = np.maximum(rows[:, w], MIN_WIDTH)
        cg, cl, smin, smax, eps = self.mod_cols
        rows[:, cg] = np.maximum(rows[:, cg], 0.0)
        rows[:, cl] = np.maximum(rows[:, cl], 0.0)
        rows[:, smin] = np.maximum(rows[:, smin], 0.0)
        rows[:, smax] = np.maximum(rows[:, smax], rows[:, smin])
        rows[:, eps] = np.maximum(rows[:, eps], MIN_EPSILON)
        gw = s["goal"].start + 1
        rows[:, gw] = np.maximum(rows[:, gw], MIN_WIDTH)
        return rows


@dataclass(frozen=True)
class Genome:
    traits: np.ndarray
    est_weights: np.ndarray
    est_width: float
    mod: ModulationParams = field(default_factory=ModulationParams)
    symbol_weights: np.ndarray | None = None
    symbol_threshold: float = 0.0
    goal: GoalParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "traits", np.asarray(self.traits, dtype=np.float64))
        object.__setattr__(self, "est_weights", np.asarray(self.est_weights, dtype=np.float64))
        sw = self.symbol_weights
        sw = np.zeros(self.est_weights.size) if sw is None else np.asarray(sw, dtype=np.float64)
        object.__setattr__(self, "symbol_weights", sw)
        ns = self.est_weights.size
        if self.traits.size != ns + 1:
            raise ValueError(f"traits must have {ns + 1} entries for {ns} channels, got {self.traits.size}")
        if sw.size != ns:
            raise ValueError(f"symbol_weights must have {ns} entries, got {sw.size}")

    @property
    def layout(self) -> GenomeLayout:
        return GenomeLayout(self.est_weights.size)

    @property
    def exposure(self) -> float:
        return float(self.traits[-1])

    def to_vector(self) -> np.ndarray:
        lay = self.layout
        s = lay.slices
        v = np.empty(lay.length)
        v[s["traits"]] = self.traits
        v[s["est_weights"]] = self.est_weights
        v[s["est_width"]] = self.est_width
        v[s["modulation"]] = self.mod.as_array()
        v[s["symbol_weights"]] = self.symbol_weights
        v[s["symbol_threshold"]] = self.symbol_threshold
        goal = self.goal or GoalParams()
        v[s["goal"]] = (goal.target, goal.width)
        return v

    @classmethod
    def from_vector(cls, v: np.ndarray, layout: GenomeLayout, goal_trait: int | None = None) -> "Genome":
        s = layout.slices
        m = v[s["modulation"]]
        goal = None
        if goal_trait is not None:
            t, w = v[s["goal"]]
            goal = GoalParams(float(t), float(w), goal_trait)
        return cls(
            traits=v[s["traits"]].copy(),
            est_weights=v[s["est_weights"]].copy(),
            est_width=float(v[s["est_width"]][0]),
            mod=ModulationParams(*(float(x) for x in m)),
            symbol_weights=v[s["symbol_weights"]].copy(),
            symbol_threshold=float(v[s["symbol_threshold"]][0]),
            goal=goal,
        )

    def with_traits(self, traits) -> "Genome":
        return replace(self, traits=np.asarray(traits, dtype=np.float64))

    def same_as(self, other: "Genome") -> bool:
        """Bit-level equality of every field."""
        a, b = self.to_vector(), other.to_vector()
        return a.tobytes() == b.tobytes() and self.goal == other.goal
