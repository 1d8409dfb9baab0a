"""Markovian n-photon recursion: the time-local reference dynamics.

With the delayed terms absent, the population for an n-photon pulse closes
recursively through the chain

    d/dt <g,k|E|g,k>      = -2 Gamma <g,k|E|g,k>
                            - sqrt(k Gamma) [ g*(t) <g,k-1|sm|g,k> + c.c. ]
    d/dt <g,k-1|sm|g,k>   = -Gamma <g,k-1|sm|g,k>
                            - sqrt(k Gamma) g(t) [ 1 - 2 <g,k-1|E|g,k-1> ]

for k = n, n-1, ..., 1 with <g,0|E|g,0> = 0.  Two drive conventions:

  * drive="ftau": g(t) = f_tau(t) - the semi-infinite waveguide's folded
    drive.  This is the reference the feedback integrator must match on
    t < tau, and the "feedback disabled" dynamics for all t.
  * drive="flat": g(t) = sqrt(2) f(t) - an infinite waveguide with flat
    coupling at the same amplitude decay rate Gamma.  This is the mirror-
    absent limit the collision-model oracle can realize unitarily.

Both are integrated with the same Heun stepper as the feedback hierarchy.
"""

from __future__ import annotations

import math

import numpy as np

from . import pulses
from .grid import TimeGrid
from .system import EXCITED_VACUUM, SystemParams

__all__ = ["run_markov"]


def _drive_samples(params: SystemParams, pulse, grid: TimeGrid, drive: str) -> np.ndarray:
    t = grid.times()
    if params.n_photons == 0 or pulse is None:
        return np.zeros(t.size, dtype=complex)
    if drive == "ftau":
        return pulses.evaluate_ftau_many(pulse, t, params.tau, params.phi)
    if drive == "flat":
        return math.sqrt(2.0) * pulses.evaluate_many(pulse, t)
    raise ValueError(f"unknown drive convention {drive!r}")


def run_markov(params: SystemParams, pulse, grid: TimeGrid, drive: str = "ftau") -> np.ndarray:
    """Population time series on grid.times() for the recursion above."""
    n = params.n_photons
    g = params.gamma
    gs = _drive_samples(params, pulse, grid, drive)
    dt = grid.dt

    if params.initial_state == EXCITED_VACUUM:
        # bare decay of the excited emitter, d<sm>/dt = -Gamma <sm>
        c = 1.0 + 0j
        pop = np.empty(grid.n_steps + 1)
        pop[0] = 1.0
        decay = 1.0 - g * dt + 0.5 * (g * dt) ** 2  # Heun of c' = -Gamma c
        for s in range(grid.n_steps):
            c *= decay
            pop[s + 1] = abs(c) ** 2
        return pop

    sig = [0j] * (n + 1)        # sig[k] = <g,k-1|sm|g,k>, index 0 unused
    popk = [0.0] * (n + 1)      # popk[k] = <g,k|E|g,k>
    rt = [math.sqrt(k * g) for k in range(n + 1)]
    out = np.empty(grid.n_steps + 1)
    out[0] = 0.0

    def rhs(sig_v, pop_v, gval):
        dsig = [0j] * (n + 1)
        dpop = [0.0] * (n + 1)
        for k in range(1, n + 1):
            dsig[k] = -g * sig_v[k] - rt[k] * gval * (1.0 - 2.0 * pop_v[k - 1])
            dpop[k] = (-2.0 * g * pop_v[k]
                       - rt[k] * 2.0 * (gval.conjugate() * sig_v[k]).real)
        return dsig, dpop

    for s in range(grid.n_steps):
        d1s, d1p = rhs(sig, popk, gs[s])
        sig_p = [sig[k] + dt * d1s[k] for k in range(n + 1)]
        pop_p = [popk[k] + dt * d1p[k] for k in range(n + 1)]
        d2s, d2p = rhs(sig_p, pop_p, gs[s + 1])
        sig = [sig[k] + 0.5 * dt * (d1s[k] + d2s[k]) for k in range(n + 1)]
        popk = [popk[k] + 0.5 * dt * (d1p[k] + d2p[k]) for k in range(n + 1)]
        out[s + 1] = popk[n]
    return out
