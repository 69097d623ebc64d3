"""Experiment orchestration: variant comparison, goal substitution, naming game.

Every cell is one ``(scenario, seed)`` run and is independent of the others,
so cells may be farmed out to worker processes (``jobs`` argument, or the
``SYMGROUND_JOBS`` environment variable). Reports are assembled in
``(variant, parameter, seed)`` order and do not depend on the job count.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .errors import InsufficientDataError, SymgroundError
from .genome import GenomeLayout
from .metrics import MetricsSeries
from .population import founders, run_simulation
from .rng import RandomStream
from .scenario import Scenario, apply_coupling, validate_scenario
from .symbols import align, alignment_rows
from .world import initial_environment, sample_context, step_environment

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CellResult:
    variant: str
    param: float
    seed: int
    score: float
    survived: bool
    final_n: int
    mean_sigma: float
    extra: dict = field(default_factory=dict, compare=False)
    error: str | None = None


@dataclass
class ComparisonReport:
    a: str
    b: str
    cells: dict
    win_rate: float
    ranksum_statistic: float
    ranksum_pvalue: float
    survival: dict
    best_baseline: float | None = None
    baseline_means: dict = field(default_factory=dict)

    def scores(self, name: str) -> np.ndarray:
        return np.array([c.score for c in self.cells[name]])

    def summary_lines(self) -> list[str]:
        lines = [f"{self.a} vs {self.b}: win_rate={self.win_rate:.3f} ranksum={self.ranksum_statistic:.3f} "
                 f"(p={self.ranksum_pvalue:.3g})"]
        for name, rate in self.survival.items():
            s = self.scores(name)
            lines.append(f"  {name}: survival={rate:.2f} mean_score={np.nanmean(s):.5f}")
        return lines


@dataclass
class GestReport:
    isolated: bool
    lambdas: tuple
    reports: dict
    rank_correlation: float
    goal_corr: dict
    goal_error: dict
    fixed_goal_error: dict

    @property
    def win_rates(self) -> list[float]:
        return [self.reports[lam].win_rate for lam in self.lambdas]

    def summary_lines(self) -> list[str]:
        lines = [f"gest isolated={self.isolated} rank_correlation={self.rank_correlation:.3f}"]
        for lam in self.lambdas:
            r = self.reports[lam]
            lines.append(
                f"  lambda={lam:g}: win_rate={r.win_rate:.3f} baseline_sigma={r.best_baseline:g} "
                f"goal_corr={self.goal_corr[lam]:.3f} goal_error={self.goal_error[lam]:.4f} "
                f"fixed_goal_error={self.fixed_goal_error[lam]:.4f}"
            )
        return lines


@dataclass
class SymbolTrajectory:
    seeds: list
    agreement: np.ndarray
    cosine: np.ndarray

    def first_hit(self, level: float) -> np.ndarray:
        """Round index at which agreement first reaches ``level`` per seed (-1 if never)."""
        hit = self.agreement >= level
        return np.where(hit.any(axis=1), hit.argmax(axis=1), -1)

    def summary_lines(self, level: float = 0.9) -> list[str]:
        hits = self.first_hit(level)
        return [
            f"symbols: seeds={len(self.seeds)} rounds={self.agreement.shape[1] - 1}",
            f"  agreement initial={self.agreement[:, 0].mean():.3f} final={self.agreement[:, -1].mean():.3f}",
            f"  cosine initial={self.cosine[:, 0].mean():.3f} final={self.cosine[:, -1].mean():.3f}",
            f"  reached {level:g}: {np.mean(hits >= 0):.2f} of seeds",
        ]


# --------------------------------------------------------------------------- cells


def summary_score(series: MetricsSeries, steps: int, start: float = 0.5) -> float:
    """Mean of ``mean_f_true`` over steps after ``start * steps``; steps after extinction count as 0."""
    first = int(math.floor(start * steps)) + 1
    if steps < first:
        raise InsufficientDataError(f"no steps after {start} of a {steps}-step run")
    step = series.column("step")
    f = series.column("mean_f_true")
    sel = step >= first
    return float(f[sel].sum() / (steps - first + 1))


def _cell(args) -> CellResult:
    sc, seed, variant, param = args
    steps = sc.population.steps
    try:
        series = run_simulation(sc, seed)
    except SymgroundError as exc:
        return CellResult(variant, param, seed, math.nan, False, 0, math.nan, error=f"{type(exc).__name__}: {exc}")
    final = series.row(len(series) - 1)
    start = sc.experiment.summary_start
    first = int(math.floor(start * steps)) + 1
    step = series.column("step")
    sel = step >= first
    extra = {}
    if sc.variant.kind == "gest" or sc.variant.kind == "fixed":
        gc = series.column("goal_corr")[sel]
        ge = series.column("mean_goal_error")[sel]
        extra["goal_corr"] = float(np.nanmean(gc)) if gc.size else math.nan
        extra["goal_error"] = float(ge.mean()) if ge.size else math.nan
    sig = series.column("mean_sigma_gen")[sel]
    return CellResult(
        variant=variant,
        param=param,
        seed=seed,
        score=summary_score(series, steps, start),
        survived=series.extinct_at is None,
        final_n=int(final["N"]),
        mean_sigma=float(sig.mean()) if sig.size else math.nan,
        extra=extra,
    )


def job_count(jobs: int | None = None) -> int:
    if jobs is None:
        jobs = int(os.environ.get("SYMGROUND_JOBS", "1") or 1)
    return max(1, int(jobs))


def run_cells(tasks: list, jobs: int | None = None) -> list[CellResult]:
    """Evaluate ``(scenario, seed, variant, param)`` tasks; output order follows input order."""
    n = job_count(jobs)
    if n == 1 or len(tasks) < 2:
        return [_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_cell, tasks, chunksize=max(1, len(tasks) // (4 * n))))


def win_rate(a, b) -> float:
    """Paired win rate of ``a`` over ``b``; ties count half, pairs with a missing score are skipped."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ok = ~(np.isnan(a) | np.isnan(b))
    if not ok.any():
        raise InsufficientDataError("no complete pairs")
    a, b = a[ok], b[ok]
    return float(np.mean((a > b) + 0.5 * (a == b)))


def _ranksum(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    a = a[~np.isnan(a)]
    b = b[~np.isnan(b)]
    if a.size == 0 or b.size == 0:
        return math.nan, math.nan
    r = stats.ranksums(a, b)
    return float(r.statistic), float(r.pvalue)


def _fixed_name(sigma: float) -> str:
    return f"fixed({sigma:g})"


def _report(a: str, cells_a: list, fixed: dict) -> ComparisonReport:
    means = {s: float(np.nanmean([c.score for c in cs])) for s, cs in fixed.items()}
    best = max(means, key=lambda s: (means[s], -s))
    b = _fixed_name(best)
    cells = {a: cells_a}
    for s, cs in fixed.items():
        cells[_fixed_name(s)] = cs
    sa = np.array([c.score for c in cells_a])
    sb = np.array([c.score for c in fixed[best]])
    stat, p = _ranksum(sa, sb)
    survival = {name: float(np.mean([c.survived for c in cs])) for name, cs in cells.items()}
    return ComparisonReport(
        a=a,
        b=b,
        cells=cells,
        win_rate=win_rate(sa, sb),
        ranksum_statistic=stat,
        ranksum_pvalue=p,
        survival=survival,
        best_baseline=best,
        baseline_means=means,
    )


def _check_seeds(seeds) -> list[int]:
    seeds = [int(s) for s in seeds]
    if len(seeds) < 10:
        raise InsufficientDataError(f"comparisons need at least 10 seeds, got {len(seeds)}")
    return seeds


def compare_experiment(base: Scenario, sigmas=None, seeds=None, jobs: int | None = None) -> ComparisonReport:
    """The G-loop variant against the best fixed-spread baseline on paired seeds."""
    validate_scenario(base)
    sigmas = tuple(base.experiment.sigma_grid if sigmas is None else sigmas)
    if not sigmas:
        raise InsufficientDataError("sigma grid is empty")
    seeds = _check_seeds(base.experiment.seed_list if seeds is None else seeds)
    gloop = base.with_variant(kind="gloop")
    tasks = [(gloop, s, "gloop", math.nan) for s in seeds]
    for sig in sigmas:
        fx = base.with_variant(kind="fixed", sigma=float(sig))
        tasks += [(fx, s, "fixed", float(sig)) for s in seeds]
    results = run_cells(tasks, jobs)
    n = len(seeds)
    fixed = {float(sig): results[n * (k + 1): n * (k + 2)] for k, sig in enumerate(sigmas)}
    return _report("gloop", results[:n], fixed)


def gest_experiment(
    base: Scenario, lambdas=None, seeds=None, isolated: bool = True, sigmas=None, jobs: int | None = None
) -> GestReport:
    """Goal-driven modulation against the best fixed baseline, for each coupling of the goal trait to fitness."""
    validate_scenario(base)
    lambdas = tuple(float(x) for x in (base.experiment.lambda_grid if lambdas is None else lambdas))
    sigmas = tuple(base.experiment.sigma_grid if sigmas is None else sigmas)
    seeds = _check_seeds(base.experiment.seed_list if seeds is None else seeds)
    tasks = []
    for lam in lambdas:
        sc = apply_coupling(base, lam)
        gest = sc.with_variant(kind="gest", coupling=lam, isolated=isolated)
        tasks += [(gest, s, "gest", lam) for s in seeds]
        for sig in sigmas:
            fx = sc.with_variant(kind="fixed", sigma=float(sig), coupling=lam)
            tasks += [(fx, s, "fixed", float(sig)) for s in seeds]
    results = run_cells(tasks, jobs)
    n = len(seeds)
    block = n * (1 + len(sigmas))
    reports, goal_corr, goal_error, fixed_error = {}, {}, {}, {}
    for k, lam in enumerate(lambdas):
        chunk = results[k * block: (k + 1) * block]
        fixed = {float(sig): chunk[n * (j + 1): n * (j + 2)] for j, sig in enumerate(sigmas)}
        rep = _report("gest", chunk[:n], fixed)
        reports[lam] = rep
        goal_corr[lam] = float(np.nanmean([c.extra.get("goal_corr", math.nan) for c in chunk[:n]]))
        goal_error[lam] = float(np.nanmean([c.extra.get("goal_error", math.nan) for c in chunk[:n]]))
        fixed_error[lam] = float(np.nanmean([c.extra.get("goal_error", math.nan) for c in fixed[rep.best_baseline]]))
    rates = [reports[lam].win_rate for lam in lambdas]
    if len(set(rates)) > 1 and len(lambdas) > 1:
        rho = float(stats.spearmanr(lambdas, rates).statistic)
    else:
        rho = 0.0
    return GestReport(isolated, lambdas, reports, rho, goal_corr, goal_error, fixed_error)


# --------------------------------------------------------------------------- naming game


def context_pool(sc: Scenario, seed: int) -> np.ndarray:
    """``context_pool`` environment states, ``context_spacing`` steps apart, from the scenario's world."""
    cfg = sc.symbols
    env = initial_environment(sc.world)
    out = []
    t = 0
    while len(out) < cfg.context_pool:
        for _ in range(cfg.context_spacing):
            t += 1
            env = step_environment(env, sc.world, RandomStream(seed, "world", 0, t))
        out.append(env.channels)
    return np.array(out)


def naming_game(sc: Scenario, seed: int, rounds: int) -> tuple[np.ndarray, np.ndarray]:
    """Closed naming game on the founder population; agreement and cosine after each round (round 0 first).

    No births, deaths or learning. Each round draws a speaker, a distinct
    hearer and a context from the pool; agreement is scored exactly over the
    whole pool.
    """
    pop = founders(sc, seed)
    if pop.size < 2:
        raise InsufficientDataError("naming game needs at least 2 agents")
    lay = GenomeLayout(sc.world.n_channels)
    sw = lay.slices["symbol_weights"]
    tc = lay.col("symbol_threshold")
    W = pop.genomes[:, sw].copy()
    th = pop.genomes[:, tc].copy()
    pool = context_pool(sc, seed)
    env0 = initial_environment(sc.world)
    rate, prune = sc.symbols.align_rate, sc.symbols.prune
    agreement = np.empty(rounds + 1)
    cosine = np.empty(rounds + 1)
    agreement[0], cosine[0] = alignment_rows(W, th, pool)
    stream = RandomStream(seed, "naming", 0, 0)
    n = pop.size
    for r in range(1, rounds + 1):
        i = stream.integers(n)
        j = stream.integers(n - 1)
        if j >= i:
            j += 1
        k = stream.integers(pool.shape[0])
        ctx = sample_context(replace(env0, relevant=pool[k, : sc.world.m_e], irrelevant=pool[k, sc.world.m_e:]),
                             sc.world, stream)
        s_act = float(W[i] @ ctx.speaker_view) - th[i] > 0.0
        h_act = float(W[j] @ ctx.hearer_view) - th[j] > 0.0
        if s_act != h_act and rate > 0:
            W[j], th[j] = align(W[i], th[i], W[j], th[j], rate, prune)
        agreement[r], cosine[r] = alignment_rows(W, th, pool)
    return agreement, cosine


def _naming_cell(args):
    sc, seed, rounds = args
    return naming_game(sc, seed, rounds)


def symbol_experiment(base: Scenario, rounds: int | None = None, seeds=None, jobs: int | None = None) -> SymbolTrajectory:
    validate_scenario(base)
    rounds = base.experiment.rounds if rounds is None else int(rounds)
    seeds = [int(s) for s in (base.experiment.seed_list if seeds is None else seeds)]
    tasks = [(base, s, rounds) for s in seeds]
    n = job_count(jobs)
    if n == 1 or len(tasks) < 2:
        out = [_naming_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            out = list(pool.map(_naming_cell, tasks))
    return SymbolTrajectory(seeds, np.array([a for a, _ in out]), np.array([c for _, c in out]))


def hazard_utility(sc: Scenario, seed: int) -> float:
    """Symbol utility of one run: activation fraction against the lagged drop in mean true fitness."""
    from .symbols import symbol_utility

    series = run_simulation(sc, seed)
    pairs = np.column_stack([series.column("activation_fraction"), series.column("mean_f_true")])
    return symbol_utility(pairs, sc.symbols.utility_lag).value
