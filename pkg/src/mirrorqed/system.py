"""System parameters and shared error types.

The emitter-waveguide problem is fully specified by the decay rate Gamma
(times are naturally measured in 1/Gamma), the round-trip delay tau, the
round-trip phase phi, an optional pure-dephasing rate, the photon number of
the driving pulse, and the initial-state tag.  The mirror distance, speed of
light, bare coupling and carrier frequency never appear on their own: they
enter only through (Gamma, tau, phi).
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "SystemParams",
    "GROUND_WITH_PULSE",
    "EXCITED_VACUUM",
    "MODELS",
    "SimulationError",
    "DiscretizationError",
]

GROUND_WITH_PULSE = "ground_with_pulse"
EXCITED_VACUUM = "excited_vacuum"

# feedback   : full delay equations (mirror present, retarded re-excitation)
# nofeedback : same drive interference, delayed terms dropped (the Markovian
#              reference the feedback dynamics must match for t < tau)
# flat       : infinite waveguide, flat coupling (drive sqrt(2)*f, no mirror)
MODELS = ("feedback", "nofeedback", "flat")


class SimulationError(RuntimeError):
    pass


class DiscretizationError(SimulationError):
    """Population left [0, 1] beyond the O(dt^2) tolerance."""


@dataclass(frozen=True)
class SystemParams:
    gamma: float = 1.0       # radiative amplitude decay rate Gamma
    tau: float = 0.0         # round-trip delay 2d/c
    phi: float = 0.0         # round-trip phase omega0 * tau, radians
    gamma_pd: float = 0.0    # pure-dephasing rate
    n_photons: int = 0       # photons in the driving pulse (0..3)
    initial_state: str = GROUND_WITH_PULSE

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"Gamma must be positive, got {self.gamma}")
        if self.tau < 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")
        if self.gamma_pd < 0:
            raise ValueError(f"gammaPD must be non-negative, got {self.gamma_pd}")
        if self.initial_state not in (GROUND_WITH_PULSE, EXCITED_VACUUM):
            raise ValueError(f"unknown initial state {self.initial_state!r}")
        if not 0 <= self.n_photons <= 3:
            raise ValueError("unsupported excitation number")
        if self.initial_state == EXCITED_VACUUM and self.n_photons != 0:
            raise ValueError("excited_vacuum initial state requires nPhotons = 0")
        if self.gamma_pd > 0 and self.n_photons == 3:
            raise ValueError("dephasing unsupported at n=3")

    def describe(self) -> dict:
        return {
            "Gamma": self.gamma,
            "tau": self.tau,
            "phi": self.phi,
            "gammaPD": self.gamma_pd,
            "nPhotons": self.n_photons,
            "initialState": self.initial_state,
        }
