"""Variance-modulated structural change.

The spread of random change is ``clamp(c / (signal + eps), sigma_min, sigma_max)``
where the signal is the agent's own estimate (or a substitute goal). The
noise multiplies the modulation rather than being added to a deterministic
update: hereditary change at reproduction, learned change within a lifetime.
Nothing here has access to the realized reproduction rate.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .genome import EvolveFlags, Genome, ModulationParams
from .rng import RandomStream


def sigma_rows(signal, c, sigma_min, sigma_max, eps):
    return np.clip(np.asarray(c) / (np.asarray(signal) + eps), sigma_min, sigma_max)


def modulation_sigma(f_est: float, p: ModulationParams, which: str = "gen") -> float:
    if which not in ("gen", "learn"):
        raise ValueError(f"which must be 'gen' or 'learn', got {which!r}")
    c = p.c_gen if which == "gen" else p.c_learn
    return float(sigma_rows(f_est, c, p.sigma_min, p.sigma_max, p.epsilon))


def mutate_rows(rows: np.ndarray, sigma: np.ndarray, eta: np.ndarray, mask: np.ndarray, layout) -> np.ndarray:
    """Children of ``rows``: masked columns get ``sigma * eta`` added, then clamped.

    Unmasked columns, and entries whose increment is exactly zero, are copied
    bit for bit.
    """
    delta = sigma[:, None] * eta
    moved = layout.clamp_rows(rows + delta)
    keep = ~mask[None, :] | (delta == 0.0)
    return np.where(keep, rows, moved)


def mutate_genome(
    parent: Genome,
    f_est_parent: float,
    p: ModulationParams,
    rng: RandomStream,
    evolve_flags: EvolveFlags | None = None,
    sigma: float | None = None,
) -> Genome:
    """Offspring genome. ``sigma`` overrides the modulated spread (fixed-variance runs)."""
    flags = EvolveFlags() if evolve_flags is None else evolve_flags
    lay = parent.layout
    s = modulation_sigma(f_est_parent, p, "gen") if sigma is None else float(sigma)
    v = parent.to_vector()
    eta = rng.normal(lay.length)
    child = mutate_rows(v[None, :], np.array([s]), eta[None, :], lay.evolve_mask(flags), lay)[0]
    goal_trait = parent.goal.trait_index if parent.goal is not None else None
    return Genome.from_vector(child, lay, goal_trait)


def learn_rows(traits: np.ndarray, sigma: np.ndarray, eta: np.ndarray, learn_idx: np.ndarray, dt: float) -> np.ndarray:
    out = traits.copy()
    out[:, learn_idx] += (sigma * np.sqrt(dt))[:, None] * eta
    return out


def learning_step(agent, p: ModulationParams, rng: RandomStream, dt: float = 1.0, learn_traits=None, sigma=None):
    """Within-lifetime random walk of the behavioural traits, spread set by the agent's last estimate.

    ``learn_traits`` defaults to the tracking traits (one per relevant
    channel, given by ``agent.last_sensed.m_e``).
    """
    g = agent.genome
    if learn_traits is None:
        learn_traits = np.arange(agent.last_sensed.m_e)
    idx = np.asarray(learn_traits, dtype=np.int64)
    s = modulation_sigma(agent.last_f_est, p, "learn") if sigma is None else float(sigma)
    if s == 0.0 or idx.size == 0:
        return agent
    eta = rng.normal(idx.size)
    traits = learn_rows(g.traits[None, :], np.array([s]), eta[None, :], idx, dt)[0]
    return replace(agent, genome=g.with_traits(traits))
