import numpy as np
import pytest

from symground.fitness import TrueFitnessConfig
from symground.genome import Genome, ModulationParams
from symground.scenario import scenario_from_dict
from symground.world import EnvironmentState, WorldConfig


@pytest.fixture
def world():
    return WorldConfig(m_e=4, m_i=4)


def make_env(relevant, irrelevant=(0.0, 0.0, 0.0, 0.0), hazard=0.0, step=0):
    return EnvironmentState(step, np.asarray(relevant, float), np.asarray(irrelevant, float), hazard)


def make_genome(traits=None, est_weights=None, est_width=0.5, mod=None, m_e=4, m_i=4, **kw):
    n = m_e + m_i
    traits = np.zeros(n + 1) if traits is None else np.asarray(traits, float)
    est = np.r_[np.ones(m_e), np.zeros(m_i)] if est_weights is None else np.asarray(est_weights, float)
    return Genome(traits, est, est_width, ModulationParams() if mod is None else mod, **kw)


def small_scenario(**sections):
    """A fast scenario: started from defaults, with section dicts merged in."""
    data = {
        "world": {"m_e": 2, "m_i": 2},
        "fitness": {"true_weights": [1.0, 1.0], "capacity": 60},
        "population": {"n0": 20, "steps": 50},
    }
    for key, value in sections.items():
        data.setdefault(key, {}).update(value)
    return scenario_from_dict(data, "small")


@pytest.fixture
def fitness_cfg():
    return TrueFitnessConfig()


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
