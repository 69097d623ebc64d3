"""Agents whose random variation is scaled by their own fitness estimate.

The package simulates a population in a drifting, jumping environment. Each
agent senses the environment, estimates its own reproduction rate, and sets
the spread of its hereditary and learned variation inversely to that
estimate. Offspring counts realize the true rate. Threshold symbols over the
sensed channels can be aligned between agents by a naming game.
"""

from .errors import CappedGrowthError, InsufficientDataError, MetricsIOError, ScenarioError, SymgroundError
from .genome import EvolveFlags, Genome, GenomeLayout, GoalParams, ModulationParams
from .metrics import MetricsSeries, emit_metrics, emit_plot, read_metrics
from .population import Agent, Population, founders, run_simulation, step_population
from .rng import RandomStream, rng_substream
from .scenario import Scenario, bundled, load_scenario, scenario_from_dict, validate_scenario

__version__ = "0.1.0"
