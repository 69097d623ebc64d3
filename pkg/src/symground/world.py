"""Environment channels: mean-reverting diffusion with uniform jumps.

Relevant channels (``e_j``) can enter the true fitness; irrelevant channels
(``i_j``) never do, but agents sense them and may weigh them. One relevant
channel doubles as the hazard source. Its value strikes the true fitness
``hazard_lead`` steps after it becomes sensible, so a symbol reading the
channel can warn of danger before it hits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .rng import RandomStream

PerChannel = Union[float, tuple]


@dataclass(frozen=True)
class ChannelParams:
    """Dynamics for a block of channels. Each entry is a scalar or one value per channel.

    ``None`` entries inherit from the relevant block.
    """

    reversion_rate: PerChannel | None = None
    long_run_means: PerChannel | None = None
    diffusion: PerChannel | None = None
    jump_prob: PerChannel | None = None
    jump_range: PerChannel | None = None


@dataclass(frozen=True)
class WorldConfig:
    m_e: int = 4
    m_i: int = 4
    reversion_rate: PerChannel = 0.0
    long_run_means: PerChannel = 0.0
    diffusion: PerChannel = 0.0
    jump_prob: PerChannel = 0.0
    jump_range: PerChannel = 1.0
    hazard_index: int = 0
    dt: float = 1.0
    hazard_lead: int = 0
    context_noise: float = 0.0
    irrelevant: ChannelParams = field(default_factory=ChannelParams)

    @property
    def n_channels(self) -> int:
        return self.m_e + self.m_i

    def channel_arrays(self) -> dict[str, np.ndarray]:
        """Per-channel parameter arrays over all ``m_e + m_i`` channels."""
        return self._arrays

    @cached_property
    def _arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name in ("reversion_rate", "long_run_means", "diffusion", "jump_prob", "jump_range"):
            rel = _broadcast(getattr(self, name), self.m_e, name)
            irr_raw = getattr(self.irrelevant, name)
            if irr_raw is None:
                # per-channel relevant values are only inherited when the block sizes agree
                irr_raw = getattr(self, name)
            irr = _broadcast(irr_raw, self.m_i, f"irrelevant.{name}")
            out[name] = np.concatenate([rel, irr])
        return out


def _broadcast(value, m: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(m, float(arr))
    if arr.shape != (m,):
        raise ValueError(f"{name}: expected a scalar or {m} values, got {arr.shape[0]}")
    return arr.copy()


@dataclass(frozen=True)
class EnvironmentState:
    step: int
    relevant: np.ndarray
    irrelevant: np.ndarray
    hazard: float
    hazard_queue: tuple = ()

    @property
    def channels(self) -> np.ndarray:
        return np.concatenate([self.relevant, self.irrelevant])


@dataclass(frozen=True)
class ContextSample:
    """A shared situation: the true channel values plus one perceived view per role."""

    values: np.ndarray
    views: np.ndarray

    @property
    def speaker_view(self) -> np.ndarray:
        return self.views[0]

    @property
    def hearer_view(self) -> np.ndarray:
        return self.views[1]


def _hazard_value(x: float) -> float:
    return max(0.0, float(x))


def initial_environment(cfg: WorldConfig, values=None) -> EnvironmentState:
    """Environment at step 0, channels at their long-run means unless given."""
    if values is None:
        values = cfg.channel_arrays()["long_run_means"]
    values = np.asarray(values, dtype=np.float64)
    h = float(values[cfg.hazard_index])
    return EnvironmentState(
        step=0,
        relevant=values[: cfg.m_e].copy(),
        irrelevant=values[cfg.m_e :].copy(),
        hazard=_hazard_value(h),
        hazard_queue=(h,) * cfg.hazard_lead,
    )


def advance_channels(values, kappa, mu, sigma, p_jump, jump_range, dt, eta, u_jump, u_value):
    """One update of every channel; broadcasts over leading axes.

    ``eta`` are standard normals, ``u_jump``/``u_value`` uniforms on [0, 1).
    """
    drifted = values + kappa * (mu - values) * dt + sigma * np.sqrt(dt) * eta
    jumped = -jump_range + 2.0 * jump_range * u_value
    return np.where(u_jump < p_jump, jumped, drifted)


def step_environment(env: EnvironmentState, cfg: WorldConfig, rng: RandomStream) -> EnvironmentState:
    p = cfg.channel_arrays()
    m = cfg.n_channels
    eta = rng.normal(m)
    u_jump = rng.random(m)
    u_value = rng.random(m)
    new = advance_channels(
        env.channels,
        p["reversion_rate"],
        p["long_run_means"],
        p["diffusion"],
        p["jump_prob"],
        p["jump_range"],
        cfg.dt,
        eta,
        u_jump,
        u_value,
    )
    sensed_hazard = float(new[cfg.hazard_index])
    if cfg.hazard_lead > 0:
        queue = env.hazard_queue[1:] + (sensed_hazard,)
        striking = env.hazard_queue[0]
    else:
        queue = ()
        striking = sensed_hazard
    return EnvironmentState(
        step=env.step + 1,
        relevant=new[: cfg.m_e],
        irrelevant=new[cfg.m_e :],
        hazard=_hazard_value(striking),
        hazard_queue=queue,
    )


def sample_context(
    env: EnvironmentState, cfg: WorldConfig, rng: RandomStream, roles: int = 2
) -> ContextSample:
    values = env.channels
    if cfg.context_noise > 0:
        views = values[None, :] + cfg.context_noise * rng.normal(roles * values.size).reshape(roles, -1)
    else:
        views = np.repeat(values[None, :], roles, axis=0)
    return ContextSample(values=values, views=views)
