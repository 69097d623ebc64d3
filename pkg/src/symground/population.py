"""Birth-death engine (the reproductive loop) and the run driver.

Agents are held as parallel arrays sorted by id. Each step runs a fixed
sequence of phases over the cohort present at the start of the step:

1. sense and estimate fitness; compute each agent's modulated spreads
2. learning walk of behavioural traits, and symbol-driven evasion
3. true fitness, using the cohort size ``N`` at the start of the step
4. births: one child with probability ``min(1, f_true * dt)``; child ids
   continue the id counter in parent-id order
5. deaths: each agent of the cohort independently with ``min(1, d * dt)``
6. age increment
7. naming-game rounds, if enabled

Every random draw comes from a stream keyed by ``(seed, phase, agent id,
step)``, so a run is a pure function of ``(scenario, seed)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import rng as rng_mod
from .errors import CappedGrowthError
from .estimator import SensedVector, correlation_from_sums, estimate_rows, support_scores, true_support
from .fitness import death_probability, resource_factor, true_fitness_rows
from .genome import Genome, GenomeLayout
from .metrics import MetricsSeries
from .rng import RandomStream, rng_substream
from .scenario import Scenario
from .symbols import activation_rows, align, alignment_rows, evade_exposure
from .variation import mutate_rows, sigma_rows
from .world import EnvironmentState, initial_environment, sample_context, step_environment

__all__ = [
    "Agent",
    "Population",
    "StepStats",
    "rng_substream",
    "founders",
    "step_population",
    "advance_population",
    "run_simulation",
]


@dataclass(frozen=True)
class Agent:
    id: int
    genome: Genome
    age: int = 0
    last_f_est: float = 0.0
    last_sensed: SensedVector | None = None


@dataclass(frozen=True)
class Population:
    ids: np.ndarray
    genomes: np.ndarray
    ages: np.ndarray
    last_f_est: np.ndarray
    last_sensed: np.ndarray
    next_id: int
    step: int
    m_e: int
    goal_trait: int | None = None

    @property
    def size(self) -> int:
        return int(self.ids.size)

    def __len__(self) -> int:
        return self.size

    @property
    def layout(self) -> GenomeLayout:
        return GenomeLayout(self.last_sensed.shape[1])

    def agent(self, k: int) -> Agent:
        return Agent(
            id=int(self.ids[k]),
            genome=Genome.from_vector(self.genomes[k], self.layout, self.goal_trait),
            age=int(self.ages[k]),
            last_f_est=float(self.last_f_est[k]),
            last_sensed=SensedVector(self.last_sensed[k].copy(), self.m_e),
        )

    def agents(self) -> list[Agent]:
        return [self.agent(k) for k in range(self.size)]

    @classmethod
    def from_agents(cls, agents, m_e: int, next_id: int | None = None, step: int = 0) -> "Population":
        agents = sorted(agents, key=lambda a: a.id)
        ns = agents[0].genome.est_weights.size
        ids = np.array([a.id for a in agents], dtype=np.int64)
        sensed = np.array(
            [a.last_sensed.values if a.last_sensed is not None else np.zeros(ns) for a in agents]
        )
        goal = agents[0].genome.goal
        return cls(
            ids=ids,
            genomes=np.array([a.genome.to_vector() for a in agents]),
            ages=np.array([a.age for a in agents], dtype=np.int64),
            last_f_est=np.array([a.last_f_est for a in agents], dtype=np.float64),
            last_sensed=sensed.reshape(len(agents), ns),
            next_id=int(ids.max()) + 1 if next_id is None else next_id,
            step=step,
            m_e=m_e,
            goal_trait=None if goal is None else goal.trait_index,
        )


@dataclass(frozen=True)
class StepStats:
    step: int
    n_start: int
    n_end: int
    births: int
    deaths: int
    mean_f_true: float
    max_f_true: float
    mean_f_est: float
    value_sums: tuple
    goal_sums: tuple
    mean_sigma_gen: float
    mean_sigma_learn: float
    mean_recall: float
    mean_precision: float
    activation_fraction: float
    mean_g_est: float
    mean_goal_error: float


@dataclass(frozen=True)
class _Plan:
    """Scenario compiled to arrays once per run."""

    layout: GenomeLayout
    m_e: int
    ns: int
    dt: float
    r_max: float
    capacity: float
    death_p: float
    sensor_noise: float
    crowding: bool
    kind: str
    fixed_sigma: float
    goal_trait: int
    mask: np.ndarray
    learn_idx: np.ndarray
    truth: np.ndarray
    support_threshold: float
    symbols_on: bool
    evade_step: float
    exposure_baseline: float
    align_rate: float
    prune: float
    rounds: int
    hard_cap: float


@lru_cache(maxsize=64)
def _plan(sc: Scenario) -> _Plan:
    w = sc.world
    lay = GenomeLayout(w.n_channels)
    learn = sc.modulation.learn_traits
    learn_idx = np.arange(w.m_e) if learn is None else np.array([int(i) for i in learn], dtype=np.int64)
    return _Plan(
        layout=lay,
        m_e=w.m_e,
        ns=w.n_channels,
        dt=w.dt,
        r_max=sc.fitness.r_max,
        capacity=sc.fitness.capacity,
        death_p=death_probability(sc.fitness, w.dt),
        sensor_noise=sc.estimator.sensor_noise,
        crowding=sc.estimator.crowding_sensor,
        kind=sc.variant.kind,
        fixed_sigma=sc.variant.sigma,
        goal_trait=sc.variant.goal_trait,
        mask=lay.evolve_mask(sc.evolve_flags),
        learn_idx=learn_idx,
        truth=true_support(sc.fitness, w.n_channels),
        support_threshold=sc.support_threshold,
        symbols_on=sc.symbols.enabled,
        evade_step=sc.symbols.evade_step if sc.symbols.enabled else 0.0,
        exposure_baseline=sc.symbols.exposure_baseline,
        align_rate=sc.symbols.align_rate,
        prune=sc.symbols.prune,
        rounds=sc.symbols.rounds_per_step if sc.symbols.enabled else 0,
        hard_cap=sc.hard_cap,
    )


def founder_genome(sc: Scenario) -> Genome:
    w, f, fd = sc.world, sc.fitness, sc.population.founder
    means = w.channel_arrays()["long_run_means"]
    traits = fd.traits if fd.traits is not None else (*means, sc.symbols.exposure_baseline)
    est = fd.est_weights if fd.est_weights is not None else (*f.true_weights, *([0.0] * w.m_i))
    v = sc.variant
    from .genome import GoalParams

    return Genome(
        traits=np.array(traits, dtype=np.float64),
        est_weights=np.array(est, dtype=np.float64),
        est_width=fd.est_width if fd.est_width is not None else f.width,
        mod=sc.modulation.params,
        symbol_weights=None if fd.symbol_weights is None else np.array(fd.symbol_weights),
        symbol_threshold=fd.symbol_threshold,
        goal=GoalParams(v.target, v.goal_width, v.goal_trait),
    )


def founders(sc: Scenario, seed: int) -> Population:
    """``n0`` clones of the founder genome; traits jittered by ``sigma_init``, symbols by ``init_scale``."""
    lay = GenomeLayout(sc.world.n_channels)
    n = sc.population.n0
    ids = np.arange(n, dtype=np.int64)
    rows = np.repeat(founder_genome(sc).to_vector()[None, :], n, axis=0)
    s = lay.slices
    if sc.population.sigma_init > 0:
        rows[:, s["traits"]] += sc.population.sigma_init * rng_mod.draw_normal(seed, "founders", ids, 0, lay.n_traits)
    if sc.symbols.init_scale > 0:
        z = rng_mod.draw_normal(seed, "founder_symbols", ids, 0, lay.n_channels + 1)
        rows[:, s["symbol_weights"]] += sc.symbols.init_scale * z[:, :-1]
        rows[:, s["symbol_threshold"]] += sc.symbols.init_scale * z[:, -1:]
    return Population(
        ids=ids,
        genomes=rows,
        ages=np.zeros(n, dtype=np.int64),
        last_f_est=np.zeros(n),
        last_sensed=np.zeros((n, lay.n_channels)),
        next_id=n,
        step=0,
        m_e=sc.world.m_e,
        goal_trait=sc.variant.goal_trait,
    )


def _sums(x: np.ndarray, y: np.ndarray) -> tuple:
    return (x.size, float(x.sum()), float(y.sum()), float(x @ x), float(y @ y), float(x @ y))


def _evaluate(plan: _Plan, pop: Population, env: EnvironmentState, fitness_cfg, seed: int, step: int):
    """Phase 1: sensed values, estimates, modulation signal and spreads."""
    G = pop.genomes
    lay = plan.layout
    s = lay.slices
    traits = G[:, s["traits"]]
    channels = env.channels
    if plan.sensor_noise > 0:
        sensed = channels[None, :] + plan.sensor_noise * rng_mod.draw_normal(seed, "sense", pop.ids, step, plan.ns)
    else:
        sensed = np.repeat(channels[None, :], pop.size, axis=0)
    f_est = estimate_rows(traits, G[:, s["est_weights"]], G[:, lay.col("est_width")], sensed, plan.r_max)
    if plan.crowding:
        f_est = f_est * resource_factor(pop.size, plan.capacity)
    gcol = s["goal"].start
    goal_err = traits[:, plan.goal_trait] - G[:, gcol]
    g_est = plan.r_max * np.exp(-(goal_err**2) / (2.0 * G[:, gcol + 1] ** 2))
    if plan.kind == "fixed":
        sg = np.full(pop.size, plan.fixed_sigma)
        sl = sg
    else:
        signal = g_est if plan.kind == "gest" else f_est
        cg, cl, smin, smax, eps = lay.mod_cols
        sg = sigma_rows(signal, G[:, cg], G[:, smin], G[:, smax], G[:, eps])
        sl = sigma_rows(signal, G[:, cl], G[:, smin], G[:, smax], G[:, eps])
    return sensed, f_est, g_est, np.abs(goal_err), sg, sl


def advance_population(pop: Population, env: EnvironmentState, sc: Scenario, seed: int):
    """One full step; returns the new population and its :class:`StepStats`."""
    plan = _plan(sc)
    lay = plan.layout
    s = lay.slices
    step = env.step
    n0 = pop.size
    ids = pop.ids

    sensed, f_est, g_est, goal_err, sg, sl = _evaluate(plan, pop, env, sc.fitness, seed, step)

    G = pop.genomes.copy()
    ts = s["traits"]
    if plan.learn_idx.size and np.any(sl > 0):
        eta = rng_mod.draw_normal(seed, "learn", ids, step, plan.learn_idx.size)
        cols = ts.start + plan.learn_idx
        G[:, cols] += (sl * math.sqrt(plan.dt))[:, None] * eta
    active, _ = activation_rows(G[:, s["symbol_weights"]], G[:, lay.col("symbol_threshold")], sensed)
    if plan.evade_step > 0:
        ex = ts.start + lay.exposure_index
        G[:, ex] = evade_exposure(G[:, ex], active, plan.evade_step, plan.exposure_baseline)

    f_true = true_fitness_rows(G[:, ts], env, n0, sc.fitness)

    p_birth = np.minimum(1.0, f_true * plan.dt)
    born = rng_mod.draw_uniform(seed, "birth", ids, step)[:, 0] < p_birth
    parents = np.flatnonzero(born)
    n_births = parents.size
    if n_births:
        eta = rng_mod.draw_normal(seed, "mutate", ids[parents], step, lay.length)
        children = mutate_rows(G[parents], sg[parents], eta, plan.mask, lay)
        child_ids = pop.next_id + np.arange(n_births, dtype=np.int64)

    if plan.death_p > 0:
        dies = rng_mod.draw_uniform(seed, "death", ids, step)[:, 0] < plan.death_p
    else:
        dies = np.zeros(n0, dtype=bool)
    keep = ~dies
    n_deaths = int(dies.sum())

    new_ids = ids[keep]
    new_G = G[keep]
    new_ages = pop.ages[keep] + 1
    new_fest = f_est[keep]
    new_sensed = sensed[keep]
    if n_births:
        new_ids = np.concatenate([new_ids, child_ids])
        new_G = np.concatenate([new_G, children])
        new_ages = np.concatenate([new_ages, np.zeros(n_births, dtype=np.int64)])
        new_fest = np.concatenate([new_fest, f_est[parents]])
        new_sensed = np.concatenate([new_sensed, sensed[parents]])

    n_end = new_ids.size
    new_pop = Population(
        ids=new_ids,
        genomes=new_G,
        ages=new_ages,
        last_f_est=new_fest,
        last_sensed=new_sensed,
        next_id=pop.next_id + n_births,
        step=step,
        m_e=pop.m_e,
        goal_trait=pop.goal_trait,
    )
    if n_end > plan.hard_cap:
        raise CappedGrowthError(step, n_end, int(plan.hard_cap) if math.isfinite(plan.hard_cap) else -1)

    if plan.rounds and n_end >= 2:
        _naming_rounds(plan, new_pop, env, sc, seed, step)

    recall, precision = support_scores(G[:, s["est_weights"]], plan.truth, plan.support_threshold)
    stats = StepStats(
        step=step,
        n_start=n0,
        n_end=n_end,
        births=n_births,
        deaths=n_deaths,
        mean_f_true=float(f_true.mean()),
        max_f_true=float(f_true.max()),
        mean_f_est=float(f_est.mean()),
        value_sums=_sums(f_est, f_true),
        goal_sums=_sums(g_est, f_true),
        mean_sigma_gen=float(sg.mean()),
        mean_sigma_learn=float(sl.mean()),
        mean_recall=float(recall.mean()),
        mean_precision=float(precision.mean()),
        activation_fraction=float(active.mean()),
        mean_g_est=float(g_est.mean()),
        mean_goal_error=float(goal_err.mean()),
    )
    return new_pop, stats


def _naming_rounds(plan: _Plan, pop: Population, env: EnvironmentState, sc: Scenario, seed: int, step: int):
    """Phase 7, in place on ``pop.genomes``: sequential speaker/hearer rounds."""
    lay = plan.layout
    sw = lay.slices["symbol_weights"]
    th = lay.col("symbol_threshold")
    G = pop.genomes
    stream = RandomStream(seed, "symbols", 0, step)
    n = pop.size
    for _ in range(plan.rounds):
        i = stream.integers(n)
        j = stream.integers(n - 1)
        if j >= i:
            j += 1
        ctx = sample_context(env, sc.world, stream)
        s_act = float(G[i, sw] @ ctx.speaker_view) - G[i, th] > 0.0
        h_act = float(G[j, sw] @ ctx.hearer_view) - G[j, th] > 0.0
        if s_act != h_act and plan.align_rate > 0:
            w, t = align(G[i, sw], G[i, th], G[j, sw], G[j, th], plan.align_rate, plan.prune)
            G[j, sw] = w
            G[j, th] = t


def step_population(pop: Population, env: EnvironmentState, scenario: Scenario, seed: int) -> Population:
    return advance_population(pop, env, scenario, seed)[0]


# --------------------------------------------------------------------------- run driver


class _Window:
    """Sliding window of pooled Pearson sums."""

    def __init__(self, length: int):
        self.buf = np.zeros((length, 6))
        self.k = 0
        self.filled = 0

    def push(self, sums: tuple) -> float:
        self.buf[self.k] = sums
        self.k = (self.k + 1) % self.buf.shape[0]
        self.filled = min(self.filled + 1, self.buf.shape[0])
        total = self.buf.sum(axis=0)
        return correlation_from_sums(*total).value


def _row(stats: StepStats, n_end: int, value_corr: float, goal_corr: float, agreement: float, cosine: float) -> dict:
    return {
        "step": stats.step,
        "N": n_end,
        "births": stats.births,
        "deaths": stats.deaths,
        "mean_f_true": stats.mean_f_true,
        "max_f_true": stats.max_f_true,
        "mean_f_est": stats.mean_f_est,
        "value_corr": value_corr,
        "mean_sigma_gen": stats.mean_sigma_gen,
        "mean_sigma_learn": stats.mean_sigma_learn,
        "mean_recall": stats.mean_recall,
        "mean_precision": stats.mean_precision,
        "agreement": agreement,
        "mean_cosine": cosine,
        "activation_fraction": stats.activation_fraction,
        "mean_g_est": stats.mean_g_est,
        "goal_corr": goal_corr,
        "mean_goal_error": stats.mean_goal_error,
    }


def _initial_stats(pop: Population, env: EnvironmentState, sc: Scenario, seed: int) -> StepStats:
    plan = _plan(sc)
    lay = plan.layout
    s = lay.slices
    sensed, f_est, g_est, goal_err, sg, sl = _evaluate(plan, pop, env, sc.fitness, seed, 0)
    f_true = true_fitness_rows(pop.genomes[:, s["traits"]], env, pop.size, sc.fitness)
    active, _ = activation_rows(pop.genomes[:, s["symbol_weights"]], pop.genomes[:, lay.col("symbol_threshold")], sensed)
    recall, precision = support_scores(pop.genomes[:, s["est_weights"]], plan.truth, plan.support_threshold)
    return StepStats(
        step=0,
        n_start=pop.size,
        n_end=pop.size,
        births=0,
        deaths=0,
        mean_f_true=float(f_true.mean()),
        max_f_true=float(f_true.max()),
        mean_f_est=float(f_est.mean()),
        value_sums=_sums(f_est, f_true),
        goal_sums=_sums(g_est, f_true),
        mean_sigma_gen=float(sg.mean()),
        mean_sigma_learn=float(sl.mean()),
        mean_recall=float(recall.mean()),
        mean_precision=float(precision.mean()),
        activation_fraction=float(active.mean()),
        mean_g_est=float(g_est.mean()),
        mean_goal_error=float(goal_err.mean()),
    )


def _alignment(pop: Population, contexts: deque, sc: Scenario, seed: int, step: int) -> tuple[float, float]:
    if not sc.symbols.enabled or pop.size < 2 or not contexts:
        return math.nan, math.nan
    lay = GenomeLayout(sc.world.n_channels)
    k = sc.symbols.eval_agents
    rows = pop.genomes
    if pop.size > k:
        order = np.argsort(rng_mod.draw_uniform(seed, "eval", pop.ids, step)[:, 0], kind="stable")
        rows = rows[np.sort(order[:k])]
    return alignment_rows(rows[:, lay.slices["symbol_weights"]], rows[:, lay.col("symbol_threshold")], np.array(contexts))


def run_simulation(scenario: Scenario, seed: int, *, population: Population | None = None) -> MetricsSeries:
    """Run ``scenario.population.steps`` steps from founders and record one row per step.

    Stops early on extinction. When the population exceeds its hard cap a
    :class:`CappedGrowthError` is raised carrying the partial series.
    """
    sc = scenario
    env = initial_environment(sc.world)
    pop = founders(sc, seed) if population is None else population
    series = MetricsSeries()
    window = _Window(sc.estimator.window)
    goal_window = _Window(sc.estimator.window)
    contexts: deque = deque(maxlen=sc.symbols.eval_contexts)
    contexts.append(env.channels)

    stats = _initial_stats(pop, env, sc, seed)
    agreement, cosine = _alignment(pop, contexts, sc, seed, 0)
    series.append(_row(stats, pop.size, window.push(stats.value_sums), goal_window.push(stats.goal_sums), agreement, cosine))

    for t in range(1, sc.population.steps + 1):
        env = step_environment(env, sc.world, RandomStream(seed, "world", 0, t))
        contexts.append(env.channels)
        try:
            pop, stats = advance_population(pop, env, sc, seed)
        except CappedGrowthError as exc:
            series.capped_at = t
            exc.series = series
            raise
        agreement, cosine = _alignment(pop, contexts, sc, seed, t)
        series.append(
            _row(stats, pop.size, window.push(stats.value_sums), goal_window.push(stats.goal_sums), agreement, cosine)
        )
        if pop.size == 0:
            series.extinct_at = t
            break
    return series


def simulate(scenario: Scenario, seed: int, steps: int | None = None):
    """Generator over ``(env, population, stats)`` for custom instrumentation."""
    sc = scenario if steps is None else scenario.with_steps(steps)
    env = initial_environment(sc.world)
    pop = founders(sc, seed)
    for t in range(1, sc.population.steps + 1):
        env = step_environment(env, sc.world, RandomStream(seed, "world", 0, t))
        pop, stats = advance_population(pop, env, sc, seed)
        yield env, pop, stats
        if pop.size == 0:
            return
