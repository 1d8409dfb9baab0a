"""Time discretization with exact delay alignment.

The delayed terms of the matrix-element equations fire exactly at t - tau and
the impulse sources fire exactly at t' +- tau/2, so the step size is adjusted
at construction until tau = 2 * k_half_tau * dt holds to the last bit.  Delayed
lookups are then pure index shifts (step - 2*k_half_tau); no history is ever
interpolated.

The auxiliary time axis t' spans [-tau/2, T + tau/2]: negative times carry the
vacuum noise sitting in the feedback arm at t = 0, and the upper pad absorbs
the impulse at t' = t + tau/2 for t up to the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TimeGrid", "build", "quad_weights"]


@dataclass(frozen=True)
class TimeGrid:
    dt: float          # adjusted step; tau = 2 * k_half_tau * dt exactly
    n_steps: int       # T = n_steps * dt >= requested horizon
    k_half_tau: int    # tau/2 in steps (0 when tau == 0)

    @property
    def tau(self) -> float:
        return 2.0 * self.k_half_tau * self.dt

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def aux_min(self) -> float:
        return -self.k_half_tau * self.dt

    @property
    def aux_max(self) -> float:
        return (self.n_steps + self.k_half_tau) * self.dt

    @property
    def n_aux(self) -> int:
        return self.n_steps + 2 * self.k_half_tau + 1

    def times(self) -> np.ndarray:
        """Step times 0, dt, ..., T."""
        return np.arange(self.n_steps + 1) * self.dt

    def aux_times(self) -> np.ndarray:
        """Auxiliary times -tau/2, ..., T + tau/2 (length n_aux)."""
        return (np.arange(self.n_aux) - self.k_half_tau) * self.dt

    def aux_index_of_step(self, step: int) -> int:
        """Auxiliary index of the step time t = step*dt."""
        return step + self.k_half_tau


def build(dt: float, horizon: float, tau: float) -> TimeGrid:
    """Build a grid, minimally adjusting dt so the delay lands on steps.

    Raises ValueError when tau > 0 cannot be resolved (tau/2 < dt).
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if tau < 0:
        raise ValueError(f"delay must be non-negative, got {tau}")
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if tau == 0.0:
        k = 0
        dt_adj = dt
    else:
        if tau / 2.0 < dt * (1.0 - 1e-12):
            raise ValueError(
                f"delay unresolvable at this step size: tau/2 = {tau / 2.0:g} < dt = {dt:g}")
        k = int(round(tau / (2.0 * dt)))
        dt_adj = tau / (2.0 * k)
    n_steps = int(np.ceil(horizon / dt_adj - 1e-9))
    n_steps = max(n_steps, 1)
    return TimeGrid(dt=dt_adj, n_steps=n_steps, k_half_tau=k)


def quad_weights(grid: TimeGrid) -> np.ndarray:
    """Trapezoidal weights over the auxiliary grid; they sum to aux_max - aux_min."""
    w = np.full(grid.n_aux, grid.dt)
    w[0] = 0.5 * grid.dt
    w[-1] = 0.5 * grid.dt
    return w
