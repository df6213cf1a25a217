"""Time signals, trajectories and fixed-step integration."""

from densitylab.dyncore.integrate import IntegratorConfig, integrate, rk4_step
from densitylab.dyncore.signals import TimeSignal, signal_eval, signal_sup_bound
from densitylab.dyncore.trajectory import STOP_REASONS, Trajectory

__all__ = [
    "IntegratorConfig",
    "STOP_REASONS",
    "TimeSignal",
    "Trajectory",
    "integrate",
    "rk4_step",
    "signal_eval",
    "signal_sup_bound",
]
