"""Normalized pulse envelopes f(t) and the feedback-modified drive f_tau(t).

Every pulse satisfies the single-photon normalization

    integral |f(t)|^2 dt = 1,

so that n applications of the wavepacket creation operator put exactly n
photons into the temporal mode f.  The semi-infinite waveguide folds the
incoming pulse with its mirror image, and every drive term in the
matrix-element equations sees the combination

    f_tau(t) = f(t - tau/2) e^{+i phi/2} - f(t + tau/2) e^{-i phi/2}

with phi the round-trip phase.  At the two rectangular edges the amplitude is
the jump midpoint A/2 (within+-1e-9 of the edge), which keeps trapezoidal
drive integrals and the Heun stepper second order across the discontinuity;
the exponential turn-on is right-continuous, f(t0) = A.

Times are in units of 1/Gamma unless the pulse parameters say otherwise;
the module itself is unit-agnostic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PulseSpec",
    "rectangular",
    "gaussian",
    "exponential",
    "tabulated",
    "evaluate",
    "evaluate_many",
    "evaluate_ftau",
]

_KINDS = ("rectangular", "gaussian", "exponential", "tabulated")


@dataclass(frozen=True)
class PulseSpec:
    """Declarative, immutable pulse shape with its normalization constant.

    Use the constructor helpers (``rectangular``, ``gaussian``,
    ``exponential``, ``tabulated``) rather than building instances by hand;
    they validate parameters and fix the amplitude so the norm is exact.
    """

    kind: str
    t0: float = 0.0          # start time (rectangular, exponential)
    tD: float = 0.0          # duration (rectangular)
    mu: float = 0.0          # center (gaussian)
    sigma: float = 0.0       # width (gaussian)
    gamma_pulse: float = 0.0  # decay rate (exponential)
    amplitude: float = 0.0   # normalization constant A
    samples_t: tuple = field(default=(), repr=False)   # tabulated support
    samples_f: tuple = field(default=(), repr=False)   # tabulated values (complex)

    def support_hint(self) -> tuple[float, float]:
        """Interval outside which |f| is zero or negligible (< 1e-14 of peak)."""
        if self.kind == "rectangular":
            return (self.t0, self.t0 + self.tD)
        if self.kind == "gaussian":
            return (self.mu - 8.5 * self.sigma, self.mu + 8.5 * self.sigma)
        if self.kind == "exponential":
            return (self.t0, self.t0 + 40.0 / self.gamma_pulse)
        return (self.samples_t[0], self.samples_t[-1])

    def describe(self) -> dict:
        """Flat key/value snapshot for output metadata."""
        out = {"pulse_kind": self.kind}
        if self.kind == "rectangular":
            out.update(pulse_t0=self.t0, pulse_tD=self.tD)
        elif self.kind == "gaussian":
            out.update(pulse_mu=self.mu, pulse_sigma=self.sigma)
        elif self.kind == "exponential":
            out.update(pulse_t0=self.t0, pulse_gammaPulse=self.gamma_pulse)
        else:
            out.update(pulse_samples=len(self.samples_t))
        return out


def rectangular(t0: float, tD: float) -> PulseSpec:
    """Flat-top pulse on [t0, t0+tD]; A = 1/sqrt(tD)."""
    if not tD > 0:
        raise ValueError(f"rectangular pulse needs tD > 0, got {tD}")
    return PulseSpec(kind="rectangular", t0=t0, tD=tD, amplitude=1.0 / math.sqrt(tD))


def gaussian(mu: float, sigma: float) -> PulseSpec:
    """Gaussian exp[-(t-mu)^2 / (2 sigma^2)]; A = pi^{-1/4} / sqrt(sigma)."""
    if not sigma > 0:
        raise ValueError(f"gaussian pulse needs sigma > 0, got {sigma}")
    return PulseSpec(kind="gaussian", mu=mu, sigma=sigma,
                     amplitude=math.pi ** -0.25 / math.sqrt(sigma))


def exponential(t0: float, gamma_pulse: float) -> PulseSpec:
    """One-sided decay Theta(t-t0) exp[-gamma_pulse (t-t0)]; A = sqrt(2 gamma_pulse)."""
    if not gamma_pulse > 0:
        raise ValueError(f"exponential pulse needs gamma_pulse > 0, got {gamma_pulse}")
    return PulseSpec(kind="exponential", t0=t0, gamma_pulse=gamma_pulse,
                     amplitude=math.sqrt(2.0 * gamma_pulse))


def tabulated(times, values) -> PulseSpec:
    """Sampled pulse, linearly interpolated and renormalized on its own grid.

    Values outside the sample range evaluate to zero.  The trapezoidal norm
    over the sample grid is rescaled to one at construction, so quadrature of
    |f|^2 on any simulation grid containing the sample points reproduces the
    normalization exactly (up to interpolation of |f|^2 between samples).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=complex)
    if t.ndim != 1 or t.size < 2 or t.shape != v.shape:
        raise ValueError("tabulated pulse needs matching 1-d time/value arrays, >= 2 samples")
    if not np.all(np.diff(t) > 0):
        raise ValueError("tabulated pulse times must be strictly increasing")
    norm = np.trapezoid(np.abs(v) ** 2, t)
    if norm <= 0:
        raise ValueError("tabulated pulse has zero norm")
    v = v / math.sqrt(norm)
    return PulseSpec(kind="tabulated", amplitude=float(np.max(np.abs(v))),
                     samples_t=tuple(t.tolist()), samples_f=tuple(v.tolist()))


def evaluate(spec: PulseSpec, t: float) -> complex:
    """Pulse amplitude f(t), including the normalization constant."""
    if spec.kind == "rectangular":
        e0, e1 = spec.t0, spec.t0 + spec.tD
        tol = 1e-9 * max(1.0, abs(e0), abs(e1))
        if abs(t - e0) <= tol or abs(t - e1) <= tol:
            return complex(0.5 * spec.amplitude)   # jump midpoint, keeps stepping 2nd order
        if e0 < t < e1:
            return complex(spec.amplitude)
        return 0j
    if spec.kind == "gaussian":
        x = (t - spec.mu) / spec.sigma
        return complex(spec.amplitude * math.exp(-0.5 * x * x))
    if spec.kind == "exponential":
        tol = 1e-9 * max(1.0, abs(spec.t0))
        if t < spec.t0 - tol:
            return 0j
        return complex(spec.amplitude * math.exp(-spec.gamma_pulse * max(t - spec.t0, 0.0)))
    # tabulated: zero outside the sampled range (documented convention)
    ts = spec.samples_t
    if t < ts[0] or t > ts[-1]:
        return 0j
    return complex(np.interp(t, ts, np.real(spec.samples_f))
                   + 1j * np.interp(t, ts, np.imag(spec.samples_f)))


def evaluate_many(spec: PulseSpec, t) -> np.ndarray:
    """Vectorized ``evaluate`` over an array of times."""
    t = np.asarray(t, dtype=float)
    if spec.kind == "rectangular":
        e0, e1 = spec.t0, spec.t0 + spec.tD
        tol = 1e-9 * max(1.0, abs(e0), abs(e1))
        out = np.where((t > e0) & (t < e1), spec.amplitude, 0.0)
        edge = (np.abs(t - e0) <= tol) | (np.abs(t - e1) <= tol)
        out[edge] = 0.5 * spec.amplitude
        return out.astype(complex)
    if spec.kind == "gaussian":
        x = (t - spec.mu) / spec.sigma
        return (spec.amplitude * np.exp(-0.5 * x * x)).astype(complex)
    if spec.kind == "exponential":
        tol = 1e-9 * max(1.0, abs(spec.t0))
        out = np.where(t >= spec.t0 - tol,
                       spec.amplitude * np.exp(-spec.gamma_pulse * np.maximum(t - spec.t0, 0.0)),
                       0.0)
        return out.astype(complex)
    ts = np.asarray(spec.samples_t)
    fs = np.asarray(spec.samples_f)
    out = np.interp(t, ts, fs.real) + 1j * np.interp(t, ts, fs.imag)
    out[(t < ts[0]) | (t > ts[-1])] = 0.0
    return out


def evaluate_ftau(spec: PulseSpec, t: float, tau: float, phi: float) -> complex:
    """Feedback-folded drive f(t-tau/2) e^{+i phi/2} - f(t+tau/2) e^{-i phi/2}."""
    if tau < 0:
        raise ValueError(f"delay must be non-negative, got {tau}")
    eih = cmath.exp(0.5j * phi)
    return evaluate(spec, t - 0.5 * tau) * eih - evaluate(spec, t + 0.5 * tau) / eih


def evaluate_ftau_many(spec: PulseSpec, t, tau: float, phi: float) -> np.ndarray:
    """Vectorized ``evaluate_ftau``."""
    if tau < 0:
        raise ValueError(f"delay must be non-negative, got {tau}")
    t = np.asarray(t, dtype=float)
    eih = cmath.exp(0.5j * phi)
    return evaluate_many(spec, t - 0.5 * tau) * eih - evaluate_many(spec, t + 0.5 * tau) / eih
