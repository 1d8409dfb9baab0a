"""Run-configuration files: INI-style sections with line-precise validation.

Format (UTF-8, `#`/`;` comments, `key = value`):

    [system]
    model = feedback            # feedback | nofeedback | flat
    Gamma = 1.0
    tau = 2.0
    phi = 6.283185307179586     # radians
    gammaPD = 0.0
    nPhotons = 2
    initialState = ground_with_pulse

    [pulse]
    kind = rectangular          # rectangular | gaussian | exponential | tabulated
    t0 = 0.0
    tD = 2.0                    # mu/sigma for gaussian, gammaPulse for exponential,
                                # file = two- or three-column text for tabulated
    [grid]
    dt = 0.01
    horizon = 30.0

    [output]
    path = out/run.csv
    format = csv                # csv | json

    [sweep]                     # sweep mode only
    family = rectangular
    widths = 0.3:3.0:16         # start:stop:count, inclusive linspace
    taus = 0.25:4.0:16

    [oracle]                    # benchmark / oracle-compare modes
    nBins = 168

Every violation is collected and reported with its file line; nothing is
silently defaulted except documented optional keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pulses
from .system import GROUND_WITH_PULSE, MODELS, SystemParams

__all__ = ["RunConfig", "ConfigError", "parse_config", "parse_config_file"]


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.violations))


@dataclass
class RunConfig:
    mode: str
    params: SystemParams
    pulse: object
    dt: float
    horizon: float
    model: str = "feedback"
    out_path: str = "out/result.csv"
    out_format: str = "csv"
    sweep_family: str = "rectangular"
    sweep_widths: tuple = ()
    sweep_taus: tuple = ()
    oracle_bins: int = 0
    warnings: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)


_KNOWN = {
    "run": {"mode"},
    "system": {"model", "Gamma", "tau", "phi", "gammaPD", "nPhotons", "initialState"},
    "pulse": {"kind", "t0", "tD", "mu", "sigma", "gammaPulse", "file"},
    "grid": {"dt", "horizon"},
    "output": {"path", "format"},
    "sweep": {"family", "widths", "taus"},
    "oracle": {"nBins"},
}


def _read_sections(text: str):
    """INI reader that remembers the line of every key."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    errors = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        if current is None:
            errors.append(f"line {lineno}: key outside any [section]")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].split(";", 1)[0].strip()
        if key in sections[current]:
            errors.append(f"line {lineno}: duplicate key {current}.{key}")
        sections[current][key] = (value, lineno)
    return sections, errors


def _axis(spec: str):
    start, stop, count = spec.split(":")
    return tuple(np.linspace(float(start), float(stop), int(count)))


def parse_config(text: str, mode: str = "run", base_dir: Path | None = None) -> RunConfig:
    sections, errors = _read_sections(text)
    warnings: list[str] = []

    for sec, keys in sections.items():
        if sec not in _KNOWN:
            errors.append(f"unknown section [{sec}]")
            continue
        for key, (_, lineno) in keys.items():
            if key not in _KNOWN[sec]:
                errors.append(f"line {lineno}: unknown key {sec}.{key}")

    def get(sec, key, conv, default=None, required=False):
        entry = sections.get(sec, {}).get(key)
        if entry is None:
            if required:
                errors.append(f"missing required key {sec}.{key}")
            return default
        value, lineno = entry
        try:
            return conv(value)
        except Exception as exc:
            errors.append(f"line {lineno}: bad value for {sec}.{key}: {exc}")
            return default

    cfg_mode = get("run", "mode", str, default=mode)
    if cfg_mode != mode:
        errors.append(f"config declares mode={cfg_mode!r} but was invoked as {mode!r}")

    model = get("system", "model", str, default="feedback")
    if model not in MODELS:
        errors.append(f"system.model must be one of {MODELS}, got {model!r}")
    gamma = get("system", "Gamma", float, default=1.0)
    tau = get("system", "tau", float, default=0.0)
    phi = get("system", "phi", float, default=0.0)
    gamma_pd = get("system", "gammaPD", float, default=0.0)
    n_photons = get("system", "nPhotons", int, default=0)
    initial = get("system", "initialState", str, default=GROUND_WITH_PULSE)

    params = None
    try:
        params = SystemParams(gamma=gamma, tau=tau, phi=phi, gamma_pd=gamma_pd,
                              n_photons=n_photons, initial_state=initial)
    except (ValueError, TypeError) as exc:
        errors.append(f"[system]: {exc}")

    pulse = None
    kind = get("pulse", "kind", str)
    needs_pulse = initial == GROUND_WITH_PULSE and (n_photons or 0) >= 1 and mode != "sweep"
    if kind is None and needs_pulse:
        errors.append("missing required key pulse.kind (scenario drives the emitter)")
    if kind is not None:
        try:
            if kind == "rectangular":
                pulse = pulses.rectangular(get("pulse", "t0", float, default=0.0),
                                           get("pulse", "tD", float, required=True, default=1.0))
            elif kind == "gaussian":
                sigma = get("pulse", "sigma", float, required=True, default=1.0)
                mu = get("pulse", "mu", float, default=4.0 * (sigma or 1.0))
                pulse = pulses.gaussian(mu, sigma)
            elif kind == "exponential":
                pulse = pulses.exponential(
                    get("pulse", "t0", float, default=0.0),
                    get("pulse", "gammaPulse", float, required=True, default=1.0))
            elif kind == "tabulated":
                fname = get("pulse", "file", str, required=True)
                if fname:
                    fpath = Path(fname)
                    if base_dir is not None and not fpath.is_absolute():
                        fpath = base_dir / fpath
                    data = np.loadtxt(fpath, ndmin=2)
                    vals = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0.0)
                    pulse = pulses.tabulated(data[:, 0], vals)
            else:
                errors.append(f"pulse.kind must be one of {pulses._KINDS}, got {kind!r}")
        except (ValueError, OSError) as exc:
            errors.append(f"[pulse]: {exc}")

    dt = get("grid", "dt", float, required=mode != "sweep", default=0.01)
    horizon = get("grid", "horizon", float, required=mode != "sweep", default=10.0)
    if dt is not None and not dt > 0:
        errors.append("grid.dt must be positive")
    if horizon is not None and not horizon > 0:
        errors.append("grid.horizon must be positive")
    if (params is not None and dt and dt > 0 and model == "feedback" and tau > 0):
        if tau / 2.0 < dt * (1.0 - 1e-12):
            errors.append(f"delay unresolvable at this step size: tau/2 = {tau / 2:g} < dt = {dt:g}")
        else:
            k = round(tau / (2.0 * dt))
            dt_adj = tau / (2.0 * k)
            if not math.isclose(dt_adj, dt, rel_tol=1e-12):
                warnings.append(f"grid.dt adjusted from {dt:g} to {dt_adj:.12g} "
                                f"so the delay lands on steps (kHalfTau={k})")
    drives_dynamics = initial != GROUND_WITH_PULSE or (n_photons or 0) >= 1
    if model == "feedback" and tau == 0.0 and drives_dynamics and mode != "sweep":
        errors.append("system.model=feedback requires tau > 0; use model=nofeedback or flat")

    out_path = get("output", "path", str, default="out/result.csv")
    out_format = get("output", "format", str, default="csv")
    if out_format not in ("csv", "json"):
        errors.append(f"output.format must be csv or json, got {out_format!r}")

    sweep_family = get("sweep", "family", str, default="rectangular")
    sweep_widths = get("sweep", "widths", _axis, default=())
    sweep_taus = get("sweep", "taus", _axis, default=())
    if mode == "sweep":
        if sweep_family not in ("rectangular", "gaussian", "exponential"):
            errors.append(f"sweep.family must be an analytic pulse family, got {sweep_family!r}")
        if not sweep_widths:
            errors.append("missing required key sweep.widths")
        if not sweep_taus:
            errors.append("missing required key sweep.taus")
        if any(t <= 0 for t in sweep_taus):
            errors.append("sweep.taus must be positive (the delay must resolve)")

    oracle_bins = get("oracle", "nBins", int, default=168)
    if mode in ("benchmark", "oracle-compare"):
        if params is not None and params.n_photons > 2 and initial == GROUND_WITH_PULSE:
            errors.append("benchmark against the brute-force oracle supports nPhotons <= 2")

    if errors:
        raise ConfigError(errors)
    return RunConfig(mode=mode, params=params, pulse=pulse, dt=dt, horizon=horizon,
                     model=model, out_path=out_path, out_format=out_format,
                     sweep_family=sweep_family, sweep_widths=sweep_widths,
                     sweep_taus=sweep_taus, oracle_bins=oracle_bins, warnings=warnings)


def parse_config_file(path, mode: str = "run") -> RunConfig:
    p = Path(path)
    return parse_config(p.read_text(), mode=mode, base_dir=p.parent)
