"""Scenario loading, the simulation driver, strategy comparison and plot export."""

from .plotdata import emit_plot_data
from .runner import (
    ComparisonResult,
    Metrics,
    RegionMetrics,
    RunOptions,
    RunResult,
    Trace,
    compare_strategies,
    detection_pass,
    initial_world,
    run,
)
from .scenario import (
    Scenario,
    ScenarioError,
    bundled,
    bundled_names,
    converging_layout,
    load_scenario,
    parse_scenario,
)

__all__ = [
    "ComparisonResult", "Metrics", "RegionMetrics", "RunOptions", "RunResult", "Scenario",
    "ScenarioError", "Trace", "bundled", "bundled_names", "compare_strategies",
    "converging_layout", "detection_pass", "emit_plot_data", "initial_world", "load_scenario",
    "parse_scenario", "run",
]
