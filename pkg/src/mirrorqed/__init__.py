"""Emitter population dynamics in a semi-infinite waveguide with delayed feedback.

The package integrates the closed hierarchy of single-time matrix elements of
the emitter lowering operator (and, with pure dephasing, of the population
operator) driven by few-photon pulses, and ships an independent time-bin
brute-force oracle for validation.
"""

from .experiments import (SweepResult, Trajectory, detect_steady_state,
                          make_pulse, run_scenario, sweep_steady_state)
from .grid import TimeGrid, build, quad_weights
from .system import (EXCITED_VACUUM, GROUND_WITH_PULSE, DiscretizationError,
                     SimulationError, SystemParams)

__version__ = "0.1.0"
