"""Python access to the awareplan simulator.

Scenarios are builtin names, paths to JSON files, or dicts in the same
format (see schema/scenario.schema.json). Results come back as plain dicts.
"""

import json as _json

from . import _awareplan as _core
from ._awareplan import ConfigError, Error, PreconditionError

__all__ = [
    "ConfigError",
    "Error",
    "PreconditionError",
    "Simulation",
    "awareness",
    "belief_update",
    "builtin_scenarios",
    "horizon_sweep",
    "lattice_action_set",
    "plot_data",
    "prediction_impact",
    "project_action",
    "resolve_scenario",
    "run",
]


def _scenario(s):
    return _json.dumps(s) if isinstance(s, dict) else str(s)


def builtin_scenarios():
    return list(_core.builtin_scenarios())


def resolve_scenario(scenario, seed=None):
    """Fully resolved config, with every default filled in."""
    return _json.loads(_core.resolve_scenario(_scenario(scenario), seed))


def run(scenario="paper-sec4", seed=None, distributions=True):
    """Simulate to the end and return the trace document."""
    return _json.loads(_core.run(_scenario(scenario), seed, distributions))


def horizon_sweep(scenario="paper-sec4", horizons=(1, 3, 5, 7, 9)):
    return _json.loads(_core.horizon_sweep(_scenario(scenario), list(horizons)))


def prediction_impact(scenario="paper-sec4", horizon=5):
    return _json.loads(_core.prediction_impact(_scenario(scenario), horizon))


def awareness(scenario="paper-sec5", beta=1):
    return _json.loads(_core.awareness(_scenario(scenario), beta))


def plot_data(trace):
    return _json.loads(_core.plot_data(_json.dumps(trace)))


lattice_action_set = _core.lattice_action_set
project_action = _core.project_action
belief_update = _core.belief_update


class Simulation:
    """Tick-by-tick engine. In external mode pass the human's velocity to tick()."""

    def __init__(self, scenario="paper-sec4", seed=None):
        self._sim = _core.Simulation(_scenario(scenario), seed)

    def tick(self, command=None):
        return _json.loads(self._sim.tick(command))

    def reset(self, seed=None):
        self._sim.reset(seed)

    @property
    def done(self):
        return self._sim.done

    @property
    def reached_goals(self):
        return self._sim.reached_goals

    @property
    def tick_index(self):
        return self._sim.tick_index

    @property
    def belief(self):
        return self._sim.belief

    @property
    def robot(self):
        return self._sim.robot

    @property
    def human(self):
        return self._sim.human

    def config(self):
        return _json.loads(self._sim.config())

    def trace(self):
        return _json.loads(self._sim.trace())
