from cri.sim.runner import RunParams, RunResult, TickTrace, run_scenario
from cri.sim.scenario import Scenario, ScenarioError, load_scenario, resolve_scenario
from cri.sim.world import SimParams, World, detect_collisions, step_world

__all__ = [
    "RunParams",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "SimParams",
    "TickTrace",
    "World",
    "detect_collisions",
    "load_scenario",
    "resolve_scenario",
    "run_scenario",
    "step_world",
]
