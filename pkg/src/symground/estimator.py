"""Agent-internal fitness estimate and the aboutness metrics.

An agent senses every channel (relevant first, irrelevant after) through
Gaussian sensor noise and forms

    f_est = r_max * exp(-sum_j v_j (a_j - s_j)^2 / (2 w_est^2))

with its own evolvable weights ``v``. Crowding is left out unless a crowding
sensor is enabled, so density is a missed reference by default.

Aboutness is scored two ways: by value (Pearson correlation of paired
estimate/true samples) and by structure (support overlap between the
estimator weights and the true-fitness weights).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InsufficientDataError
from .fitness import TrueFitnessConfig
from .genome import Genome
from .rng import RandomStream
from .world import EnvironmentState


@dataclass(frozen=True)
class SensedVector:
    values: np.ndarray
    m_e: int

    @property
    def relevant(self) -> np.ndarray:
        return self.values[: self.m_e]

    @property
    def irrelevant(self) -> np.ndarray:
        return self.values[self.m_e :]


@dataclass(frozen=True)
class AboutnessReport:
    recall: float
    precision: float
    missed: list = field(default_factory=list)
    erroneous: list = field(default_factory=list)
    value_corr: float = float("nan")


class Correlation(NamedTuple):
    value: float
    degenerate: bool


def sense(genome: Genome, env: EnvironmentState, sensor_noise: float, rng: RandomStream) -> SensedVector:
    channels = env.channels
    if sensor_noise > 0:
        channels = channels + sensor_noise * rng.normal(channels.size)
    return SensedVector(values=channels, m_e=env.relevant.size)


def estimate_rows(traits: np.ndarray, weights: np.ndarray, widths: np.ndarray, sensed: np.ndarray, r_max: float):
    """Row-wise estimate for ``(N, n_traits)`` traits and ``(N, n_channels)`` weights/sensed values."""
    ns = sensed.shape[1]
    diff = traits[:, :ns] - sensed
    mismatch = np.einsum("ij,ij->i", weights, diff * diff)
    return r_max * np.exp(-mismatch / (2.0 * widths * widths))


def estimate_fitness(genome: Genome, sensed: SensedVector, r_max: float) -> float:
    if sensed.values.size != genome.est_weights.size:
        raise ValueError(
            f"sensed vector has {sensed.values.size} channels, estimator expects {genome.est_weights.size}"
        )
    return float(
        estimate_rows(
            genome.traits[None, :],
            genome.est_weights[None, :],
            np.array([genome.est_width]),
            sensed.values[None, :],
            r_max,
        )[0]
    )


def pearson(x, y) -> Correlation:
    """Pearson correlation; ``(0.0, True)`` when either side is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or x.size != y.size:
        raise InsufficientDataError(f"need at least 2 paired samples, got {min(x.size, y.size)}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        return Correlation(0.0, True)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return Correlation(float(np.clip(r, -1.0, 1.0)), False)


def correlation_from_sums(n, sx, sy, sxx, syy, sxy) -> Correlation:
    """Pearson correlation from pooled sufficient statistics."""
    if n < 2:
        return Correlation(0.0, True)
    vx = sxx - sx * sx / n
    vy = syy - sy * sy / n
    # relative floor guards cancellation when a side is constant
    if vx <= 1e-12 * max(sxx, 1e-300) or vy <= 1e-12 * max(syy, 1e-300):
        return Correlation(0.0, True)
    r = (sxy - sx * sy / n) / np.sqrt(vx * vy)
    return Correlation(float(np.clip(r, -1.0, 1.0)), False)


def value_aboutness(paired_series) -> Correlation:
    """Correlation of ``(f_est, f_true)`` samples."""
    arr = np.asarray(paired_series, dtype=np.float64).reshape(-1, 2)
    return pearson(arr[:, 0], arr[:, 1])


def default_support_threshold(cfg: TrueFitnessConfig) -> float:
    return 0.05 * float(np.max(cfg.weights))


def true_support(cfg: TrueFitnessConfig, n_channels: int) -> np.ndarray:
    mask = np.zeros(n_channels, dtype=bool)
    mask[: cfg.weights.size] = cfg.weights > 0
    return mask


def support_scores(weights: np.ndarray, truth: np.ndarray, threshold: float):
    """Row-wise ``(recall, precision)`` of the estimated support ``weights >= threshold``."""
    est = weights >= threshold
    hits = (est & truth[None, :]).sum(axis=1)
    n_true = truth.sum()
    n_est = est.sum(axis=1)
    recall = hits / n_true if n_true else np.ones(weights.shape[0])
    precision = np.where(n_est > 0, hits / np.maximum(n_est, 1), 1.0)
    return recall, precision


def structural_aboutness(genome: Genome, cfg: TrueFitnessConfig, threshold: float | None = None) -> AboutnessReport:
    if threshold is None:
        threshold = default_support_threshold(cfg)
    if threshold <= 0:
        raise ValueError("support threshold must be > 0")
    v = genome.est_weights
    m_e = cfg.weights.size
    truth = true_support(cfg, v.size)
    recall, precision = support_scores(v[None, :], truth, threshold)
    est = v >= threshold
    missed = [int(j) for j in np.flatnonzero(truth & ~est)]
    erroneous = [int(j) for j in np.flatnonzero(est[m_e:])]
    return AboutnessReport(
        recall=float(recall[0]),
        precision=float(precision[0]),
        missed=missed,
        erroneous=erroneous,
    )
