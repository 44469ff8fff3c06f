"""Scenario configuration, closed-loop runner, parameter sweep and report files."""

from .config import AgentConfig, ScenarioConfig, load_bundled, load_scenario, parse_scenario
from .output import write_outputs, write_summary, write_sweep
from .runner import CostReport, SimTrace, accumulate_costs, run_oracle, run_scenario
from .sweep import SweepReport, tau_sweep

__all__ = [
    "AgentConfig", "ScenarioConfig", "load_bundled", "load_scenario", "parse_scenario",
    "write_outputs", "write_summary", "write_sweep", "CostReport", "SimTrace",
    "accumulate_costs", "run_oracle", "run_scenario", "SweepReport", "tau_sweep",
]
