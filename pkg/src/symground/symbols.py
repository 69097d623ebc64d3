"""Threshold symbols over the sensed factor space, and their alignment.

A symbol is a weighted sum of sensed channels compared with a threshold.
Agents that see their symbol active reduce exposure to the hazard. Pairs of
agents play a naming game on a shared context: when speaker and hearer
disagree, the hearer's symbol moves toward the speaker's and small weights
are pruned.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import InsufficientDataError
from .estimator import Correlation, pearson
from .world import ContextSample


@dataclass(frozen=True)
class Symbol:
    weights: np.ndarray
    threshold: float

    @classmethod
    def of(cls, genome) -> "Symbol":
        return cls(np.asarray(genome.symbol_weights, dtype=np.float64), float(genome.symbol_threshold))


class Activation(NamedTuple):
    active: bool
    margin: float


@dataclass(frozen=True)
class GameOutcome:
    speaker_active: bool
    hearer_active: bool
    agree: bool
    hearer_updated: bool


def activation_rows(weights: np.ndarray, thresholds: np.ndarray, sensed: np.ndarray):
    """Margins and activity for ``(N, ns)`` weights against ``(N, ns)`` (or ``(ns,)``) sensed values."""
    margin = np.einsum("ij,ij->i", weights, np.broadcast_to(sensed, weights.shape)) - thresholds
    return margin > 0.0, margin


def symbol_activation(sym: Symbol, sensed) -> Activation:
    values = getattr(sensed, "values", sensed)
    values = np.asarray(values, dtype=np.float64)
    if values.size != sym.weights.size:
        raise ValueError(f"symbol has {sym.weights.size} weights, sensed vector has {values.size}")
    z = float(sym.weights @ values) - sym.threshold
    return Activation(z > 0.0, z)


def evade_exposure(exposure, active, step: float, baseline: float):
    """Lower exposure by ``step`` while active (floor 0); otherwise relax toward ``baseline``."""
    exposure = np.asarray(exposure, dtype=np.float64)
    lowered = np.maximum(exposure - step, 0.0)
    relaxed = exposure + np.clip(baseline - exposure, -step, step)
    return np.where(active, lowered, relaxed)


def evade_on_symbol(agent, active: bool, evade_step: float, baseline: float | None = None):
    g = agent.genome
    x = g.exposure
    base = x if baseline is None else baseline
    new = float(evade_exposure(x, active, evade_step, base))
    if new == x:
        return agent
    traits = g.traits.copy()
    traits[-1] = new
    return replace(agent, genome=g.with_traits(traits))


def align(w_s, th_s, w_h, th_h, rate: float, prune: float):
    """Hearer symbol moved toward the speaker's by ``rate``, then pruned."""
    w = (1.0 - rate) * w_h + rate * w_s
    th = (1.0 - rate) * th_h + rate * th_s
    if prune > 0:
        w = np.where(np.abs(w) < prune, 0.0, w)
    return w, th


def communication_round(speaker, hearer, ctx: ContextSample, align_rate: float, prune: float = 0.0):
    """One naming-game round. Returns ``(speaker, hearer, outcome)``; the speaker never changes."""
    if not 0.0 <= align_rate <= 1.0:
        raise ValueError(f"align_rate must be in [0, 1], got {align_rate}")
    s_sym, h_sym = Symbol.of(speaker.genome), Symbol.of(hearer.genome)
    s_act = symbol_activation(s_sym, ctx.speaker_view).active
    h_act = symbol_activation(h_sym, ctx.hearer_view).active
    agree = s_act == h_act
    updated = False
    if not agree and align_rate > 0.0:
        w, th = align(s_sym.weights, s_sym.threshold, h_sym.weights, h_sym.threshold, align_rate, prune)
        hearer = replace(hearer, genome=replace(hearer.genome, symbol_weights=w, symbol_threshold=float(th)))
        updated = True
    return speaker, hearer, GameOutcome(s_act, h_act, agree, updated)


def _symbol_matrix(agents):
    if hasattr(agents, "shape"):
        raise TypeError("pass agents, genomes or Symbols, or call alignment_rows directly")
    syms = [a if isinstance(a, Symbol) else Symbol.of(getattr(a, "genome", a)) for a in agents]
    w = np.array([s.weights for s in syms], dtype=np.float64)
    th = np.array([s.threshold for s in syms], dtype=np.float64)
    return w, th


def pairwise_agreement(active: np.ndarray) -> float:
    """Mean over agent pairs and contexts of identical activation; ``active`` is ``(agents, contexts)``."""
    n = active.shape[0]
    k = active.sum(axis=0).astype(np.float64)
    pairs = n * (n - 1) / 2.0
    same = k * (k - 1) / 2.0 + (n - k) * (n - k - 1) / 2.0
    return float(np.mean(same / pairs))


def mean_pairwise_cosine(weights: np.ndarray) -> float:
    """Mean cosine over distinct pairs; pairs involving a zero vector count as 0."""
    n = weights.shape[0]
    norms = np.linalg.norm(weights, axis=1)
    unit = np.divide(weights, norms[:, None], out=np.zeros_like(weights), where=norms[:, None] > 0)
    gram = unit @ unit.T
    total = gram.sum() - np.trace(gram)
    return float(total / (n * (n - 1)))


def alignment_rows(weights: np.ndarray, thresholds: np.ndarray, contexts: np.ndarray):
    """Agreement and mean cosine for symbol rows against a ``(contexts, ns)`` matrix."""
    if weights.shape[0] < 2:
        raise InsufficientDataError("alignment needs at least 2 agents")
    if contexts.shape[0] < 1:
        raise InsufficientDataError("alignment needs at least 1 context")
    active = (weights @ contexts.T - thresholds[:, None]) > 0.0
    return pairwise_agreement(active), mean_pairwise_cosine(weights)


def alignment_metrics(agents, contexts) -> tuple[float, float]:
    w, th = _symbol_matrix(agents)
    ctx = np.array([getattr(c, "values", c) for c in contexts], dtype=np.float64)
    if ctx.ndim == 1:
        ctx = ctx[None, :]
    return alignment_rows(w, th, ctx)


def symbol_utility(series, lag: int = 1) -> Correlation:
    """Correlation of activation fraction at ``t`` with the fitness drop over ``(t, t + lag]``.

    ``series`` is a sequence of ``(activation_fraction, mean_f_true)`` pairs,
    one per step. Positive values mean the symbol anticipates drops.
    """
    arr = np.asarray(series, dtype=np.float64).reshape(-1, 2)
    if lag < 1 or arr.shape[0] <= lag:
        raise InsufficientDataError(f"series of length {arr.shape[0]} too short for lag {lag}")
    act = arr[:-lag, 0]
    drop = arr[:-lag, 1] - arr[lag:, 1]
    if act.size < 2:
        return Correlation(0.0, True)
    return pearson(act, drop)
