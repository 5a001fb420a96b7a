"""Grover-mixer QAOA simulation lab."""
from .substate import (AngleSchedule, CostTable, FeasibleSet, SubspaceState, apply_grover_mixer,
                       apply_phase_separator, expectation, optimum_probability, run_schedule,
                       sample, uniform_state)

__all__ = [
    "AngleSchedule", "CostTable", "FeasibleSet", "SubspaceState", "apply_grover_mixer",
    "apply_phase_separator", "expectation", "optimum_probability", "run_schedule", "sample",
    "uniform_state",
]
__version__ = "0.1.0"
