"""True fitness: the expected reproduction rate behind the reproductive loop.

``f_true = r_max * exp(-D / (2 w^2)) * (1 - N/K)^+ * P`` where ``D`` is the
weighted squared mismatch between tracking traits and relevant channels and
``P`` is the hazard penalty. Irrelevant channels never enter. Fitness is
memoryless given (traits, environment, N); history acts only through the
genome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RandomStream
from .world import EnvironmentState


@dataclass(frozen=True)
class TrueFitnessConfig:
    r_max: float = 0.1
    true_weights: tuple = (1.0, 1.0, 1.0, 1.0)
    width: float = 0.5
    capacity: float = 500.0
    death_rate: float = 0.02
    hazard_threshold: float = math.inf
    hazard_penalty: float = 1.0
    exposure_safe: float = 0.0

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.true_weights, dtype=np.float64)


def resource_factor(n: float, capacity: float) -> float:
    if math.isinf(capacity):
        return 1.0
    return max(0.0, 1.0 - n / capacity)


def hazard_multiplier(exposure, hazard: float, cfg: TrueFitnessConfig):
    """``hazard_penalty`` where the hazard is above threshold and exposure above its safe level."""
    if hazard <= cfg.hazard_threshold:
        return np.ones_like(np.asarray(exposure, dtype=np.float64))
    return np.where(np.asarray(exposure) > cfg.exposure_safe, cfg.hazard_penalty, 1.0)


def true_fitness_rows(traits: np.ndarray, env: EnvironmentState, n: int, cfg: TrueFitnessConfig) -> np.ndarray:
    """True fitness for each row of a ``(N, n_traits)`` trait matrix."""
    u = cfg.weights
    m_e = u.size
    diff = traits[:, :m_e] - env.relevant[None, :]
    mismatch = (diff * diff) @ u
    kernel = np.exp(-mismatch / (2.0 * cfg.width**2))
    penalty = hazard_multiplier(traits[:, -1], env.hazard, cfg)
    return cfg.r_max * kernel * resource_factor(n, cfg.capacity) * penalty


def true_fitness(genome, env: EnvironmentState, n: int, cfg: TrueFitnessConfig) -> float:
    return float(true_fitness_rows(genome.traits[None, :], env, n, cfg)[0])


def death_probability(cfg: TrueFitnessConfig, dt: float) -> float:
    return min(1.0, cfg.death_rate * dt)


def death_event(agent, cfg: TrueFitnessConfig, rng: RandomStream, dt: float = 1.0) -> bool:
    p = death_probability(cfg, dt)
    if p <= 0.0:
        return False
    return rng.random() < p
