"""Independent references for validating the hierarchy integrator.

Three tiers, sharing no code with the integrator:

* closed forms: Wigner-Weisskopf decay and the exact piecewise solution of
  the delayed vacuum amplitude (method of steps), plus its t -> infinity
  residue limit,
* a brute-force time-bin state vector: the waveguide is cut into coarse
  bins, each carrying bosonic noise; the emitter collides unitarily with
  the bin at t - tau/2 and the bin at t + tau/2 simultaneously (relative
  phase e^{i phi}), which reproduces decay, drive interference and feedback
  without ever writing a delay equation.  Deliberately a *different*
  discretization (coarse bins, exact collision exponentials, first-order in
  bin width) so that agreement with the fine-grid Heun integrator is
  evidence rather than tautology.

The collision model conserves the excitation number exactly and the norm to
machine precision; both are asserted every step.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import pulses
from .system import EXCITED_VACUUM, GROUND_WITH_PULSE, SimulationError, SystemParams

__all__ = [
    "ww_decay",
    "vacuum_feedback_exact",
    "steady_state_residue",
    "TimeBinState",
    "brute_force_timebin",
]

_MAX_DIM = 10_000_000
_MAX_INTERVALS = 50


def ww_decay(gamma: float, t) -> np.ndarray | float:
    """Free-space excited-state population e^{-2 Gamma t}."""
    return np.exp(-2.0 * gamma * np.asarray(t, dtype=float)) if np.ndim(t) else \
        math.exp(-2.0 * gamma * t)


def vacuum_feedback_exact(gamma: float, tau: float, phi: float, t: float) -> complex:
    """Exact amplitude c(t) of dc/dt = -Gamma c + Gamma e^{i phi} c(t-tau) Theta(t-tau).

    Piecewise (method of steps): on [k tau, (k+1) tau) the solution is the
    degree-k polynomial-times-exponential

        c(t) = sum_{j=0..k} (Gamma e^{i phi})^j e^{-Gamma (t - j tau)} (t - j tau)^j / j!

    Refuses beyond 50 intervals; use ``steady_state_residue`` for the limit.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if tau == 0.0:
        return cmath.exp(gamma * (cmath.exp(1j * phi) - 1.0) * t)
    k = int(math.floor(t / tau + 1e-12))
    if k > _MAX_INTERVALS:
        raise SimulationError(
            f"{k} delay intervals exceed the series limit ({_MAX_INTERVALS}); "
            "use steady_state_residue for the long-time value")
    z = gamma * cmath.exp(1j * phi)
    c = 0j
    for j in range(k + 1):
        dtj = t - j * tau
        c += z ** j * cmath.exp(-gamma * dtj) * dtj ** j / math.factorial(j)
    return c


def steady_state_residue(gamma: float, tau: float) -> float:
    """Long-time trapped population (1 + Gamma tau)^{-2} for phi = 2 pi m."""
    return (1.0 + gamma * tau) ** -2


@dataclass
class TimeBinState:
    """State vector over {TLS} x {bin occupations, fixed total excitations}."""
    amplitudes: np.ndarray
    bin_dt: float
    feedback_offset: int          # bins per round trip tau
    n_bins: int
    n_excitations: int

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _pair_idx(nb: int, a, b):
    """Index of the unordered pair {a, b} in row-major upper-triangular order."""
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return lo * nb - (lo * (lo - 1)) // 2 + (hi - lo)


def _bin_amplitudes(pulse, edges: np.ndarray, bin_dt: float) -> np.ndarray:
    """Per-bin mode amplitudes q_k = (1/sqrt(bin_dt)) * integral_bin f dt."""
    sub = 16
    q = np.empty(edges.size - 1, dtype=complex)
    for k in range(edges.size - 1):
        ts = np.linspace(edges[k], edges[k + 1], sub + 1)
        q[k] = np.trapezoid(pulses.evaluate_many(pulse, ts), ts) / math.sqrt(bin_dt)
    return q


class _Collider:
    """Applies exp(X_m) for the per-step anti-Hermitian bin-coupling generator."""

    def __init__(self, nb: int, n_exc: int):
        self.nb = nb
        self.n_exc = n_exc
        if n_exc == 1:
            self.dim = nb + 1                  # |g;1_k>, |e;vac>
            self.e_off = nb
        elif n_exc == 2:
            self.npairs = nb * (nb + 1) // 2   # |g;{i,j}>, |e;1_k>
            self.dim = self.npairs + nb
            self.e_off = self.npairs
        else:
            raise SimulationError("brute force supports at most two excitations")
        if self.dim > _MAX_DIM:
            raise SimulationError(
                f"state dimension {self.dim} exceeds {_MAX_DIM}; reduce nBins "
                f"(dimension grows as nBins^{n_exc})")

    def apply_exp(self, v: np.ndarray, bins, coeffs, eta: float) -> np.ndarray:
        """v <- exp(X) v with X = sum_j [conj(eta_j) B_j^+ sm - eta_j sp B_j]."""
        nb, e_off = self.nb, self.e_off
        ks = np.arange(nb)
        plans = []
        for j, c in zip(bins, coeffs):
            etaj = eta * c
            if self.n_exc == 1:
                tgt = np.array([j])
                src = np.array([e_off])
                fac = np.array([1.0])
            else:
                tgt = _pair_idx(nb, ks, np.full(nb, j))
                src = e_off + ks
                fac = np.where(ks == j, math.sqrt(2.0), 1.0)
            plans.append((tgt, src, fac, etaj))

        out = v.copy()
        term = v
        for order in range(1, 80):
            nxt = np.zeros_like(v)
            for tgt, src, fac, etaj in plans:
                np.add.at(nxt, tgt, etaj.conjugate() * fac * term[src])
                np.subtract.at(nxt, src, etaj * fac * term[tgt])
            term = nxt / order
            out += term
            if np.linalg.norm(term) < 1e-17 * max(np.linalg.norm(out), 1e-30):
                return out
        raise SimulationError("collision exponential failed to converge")


def brute_force_timebin(params: SystemParams, pulse, n_bins: int, horizon: float,
                        mirror: bool = True):
    """Propagate the time-bin state vector; returns (times, population, state).

    mirror=True  : bins cover [-tau/2, horizon + tau/2]; at step m the emitter
                   couples to bin m (the returning field, phase e^{+i phi/2})
                   and bin m + tau/bin_dt (the incoming field, phase
                   -e^{-i phi/2}), each at rate Gamma.
    mirror=False : flat waveguide; bins cover [0, horizon], single coupling at
                   rate 2 Gamma (the mirror-absent Markov limit).

    Requires tau/2 to be an integer number of bins (mirror case).
    """
    if params.initial_state == GROUND_WITH_PULSE and params.n_photons > 2:
        raise SimulationError("brute force supports at most two excitations")
    g = params.gamma

    if mirror:
        span = horizon + params.tau
        bin_dt = span / n_bins
        half = params.tau / 2.0 / bin_dt
        if abs(half - round(half)) > 1e-9 or round(half) < 1:
            raise SimulationError(
                f"tau/2 = {params.tau / 2:g} is not an integer number of bins "
                f"(bin_dt = {bin_dt:g}); choose nBins so that nBins * tau / "
                f"(2 * (horizon + tau)) is an integer")
        koff = int(round(half))
        edges = -params.tau / 2.0 + bin_dt * np.arange(n_bins + 1)
        eta = math.sqrt(g * bin_dt)          # per-bin coupling, |c1|^2+|c2|^2 = 2
        eih = cmath.exp(0.5j * params.phi)
        step_bins = lambda m: (m, m + 2 * koff)
        coeffs = (eih, -eih.conjugate())
        n_steps = n_bins - 2 * koff
    else:
        bin_dt = horizon / n_bins
        koff = 0
        edges = bin_dt * np.arange(n_bins + 1)
        eta = math.sqrt(2.0 * g * bin_dt)
        step_bins = lambda m: (m,)
        coeffs = (1.0 + 0j,)
        n_steps = n_bins

    n_exc = 1 if params.initial_state == EXCITED_VACUUM else params.n_photons
    if n_exc == 0:
        times = bin_dt * np.arange(n_steps + 1)
        state = TimeBinState(np.zeros(1, dtype=complex), bin_dt, 2 * koff, n_bins, 0)
        return times, np.zeros(n_steps + 1), state

    col = _Collider(n_bins, n_exc)
    v = np.zeros(col.dim, dtype=complex)
    if params.initial_state == EXCITED_VACUUM:
        v[col.e_off] = 1.0
    else:
        q = _bin_amplitudes(pulse, edges, bin_dt)
        if n_exc == 1:
            v[:n_bins] = q
        else:
            i, j = np.triu_indices(n_bins)
            amps = np.where(i == j, q[i] * q[j], math.sqrt(2.0) * q[i] * q[j])
            v[_pair_idx(n_bins, i, j)] = amps
        v /= np.linalg.norm(v)

    pop = np.empty(n_steps + 1)
    pop[0] = float(np.sum(np.abs(v[col.e_off:]) ** 2))
    for m in range(n_steps):
        v = col.apply_exp(v, step_bins(m), coeffs, eta)
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > 1e-8:
            raise SimulationError(f"norm drift {nrm - 1.0:.3e} at collision {m}")
        pop[m + 1] = float(np.sum(np.abs(v[col.e_off:]) ** 2))

    times = bin_dt * np.arange(n_steps + 1)
    state = TimeBinState(v, bin_dt, 2 * koff, n_bins, n_exc)
    return times, pop, state
