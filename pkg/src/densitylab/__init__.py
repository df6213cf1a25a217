"""Simulation and verification lab for perturbed density systems.

Submodules: ``dyncore`` (signals, trajectories, integration), ``density``
(density-function catalog), ``analysis`` (Lyapunov checks and regions),
``plant`` (SISO polynomial plants), ``adaptive`` (density-based adaptive
controller) and ``harness`` (scenarios, presets, reports, plots, CLI).
"""

__version__ = "0.1.0"
