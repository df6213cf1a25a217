"""Scenario files, verification checks, runner, plotting and command line."""

from densitylab.harness.checks import CHECKS, CheckResult
from densitylab.harness.runner import RunReport, run, run_batch, simulate
from densitylab.harness.scenario import (Scenario, list_presets, load_scenario, preset_names,
                                         scenario_from_dict)

__all__ = ["CHECKS", "CheckResult", "RunReport", "Scenario", "list_presets", "load_scenario",
           "preset_names", "run", "run_batch", "scenario_from_dict", "simulate"]
