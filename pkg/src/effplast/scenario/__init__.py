"""Scenario configs, the time-marching runner and run comparison."""

from .compare import Discrepancy, compare
from .config import ScenarioConfig, load_config, parse_config
from .runner import ScenarioResult, run_scenario

__all__ = ["Discrepancy", "ScenarioConfig", "ScenarioResult", "compare", "load_config", "parse_config", "run_scenario"]
