"""Scenario configuration, built-in catalog, persistence and the command line."""
from .config import ConfigError, ScenarioConfig, load_config, parse_config, validate
from .scenarios import builtin_scenarios, get_scenario

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "parse_config", "validate",
           "builtin_scenarios", "get_scenario"]
