"""Rendering: population trajectories with pulse shading, steady-state maps.

Deterministic by construction: fixed style, Agg backend, no timestamps or
version strings in the PNG metadata, so identical inputs give identical
bytes.  Unconverged sweep cells are hatched rather than interpolated.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .figspec import FigureSpec, SchemaError, read_result

__all__ = ["render"]

_COLORS = ("#c23b22", "#2a7f62", "#27509b", "#8a5ea8", "#b8860b")


def _pulse_envelope(meta: dict, t: np.ndarray) -> np.ndarray | None:
    """|f(t)|^2-shaped envelope from trajectory metadata, peak-normalized."""
    kind = meta.get("pulse_kind")
    if kind == "rectangular":
        t0, td = meta["pulse_t0"], meta["pulse_tD"]
        return ((t >= t0) & (t <= t0 + td)).astype(float)
    if kind == "gaussian":
        mu, sig = meta["pulse_mu"], meta["pulse_sigma"]
        return np.exp(-((t - mu) ** 2) / sig ** 2)
    if kind == "exponential":
        t0, gp = meta["pulse_t0"], meta["pulse_gammaPulse"]
        return np.where(t >= t0, np.exp(-2.0 * gp * np.maximum(t - t0, 0.0)), 0.0)
    return None


def _render_trajectories(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=150)
    envelope_drawn = False
    for i, path in enumerate(spec.inputs):
        kind, meta, data = read_result(path)
        if kind != "trajectory":
            raise SchemaError(f"{path}: trajectories panel needs trajectory CSVs")
        t, pop = data[:, 0], data[:, 1]
        label = spec.labels[i] if spec.labels else Path(path).stem
        ax.plot(t, pop, color=_COLORS[i % len(_COLORS)], lw=1.6, label=label)
        if not envelope_drawn:
            env = _pulse_envelope(meta, t)
            if env is not None and np.any(env > 0):
                scale = 0.95 * max(float(np.max(pop)), 1e-3)
                ax.fill_between(t, env * scale, color="#f2c94c", alpha=0.35,
                                lw=0, label="pulse envelope", zorder=0)
                envelope_drawn = True
    ax.set_xlabel(r"$\Gamma t$")
    ax.set_ylabel("emitter population")
    if spec.title:
        ax.set_title(spec.title)
    ax.set_ylim(bottom=0.0)
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return fig


def _render_heatmap(spec: FigureSpec):
    kind, meta, data = read_result(spec.inputs[0])
    if kind != "sweep":
        raise SchemaError(f"{spec.inputs[0]}: heatmap needs a sweep CSV")
    widths = np.unique(data[:, 0])
    taus = np.unique(data[:, 1])
    if widths.size * taus.size != data.shape[0]:
        raise SchemaError(f"{spec.inputs[0]}: rows do not form a full grid")
    ss = data[:, 2].reshape(widths.size, taus.size)
    conv = data[:, 3].reshape(widths.size, taus.size).astype(bool)

    fig, ax = plt.subplots(figsize=(5.6, 4.4), dpi=150)
    mesh = ax.pcolormesh(taus, widths, ss, shading="nearest", cmap="viridis",
                         vmin=0.0, vmax=max(float(ss.max()), 1e-6))
    fig.colorbar(mesh, ax=ax, label="steady-state population")
    if not conv.all():
        # hatch undetected cells instead of pretending they converged
        dt_ = taus[1] - taus[0] if taus.size > 1 else 1.0
        dw = widths[1] - widths[0] if widths.size > 1 else 1.0
        for i in range(widths.size):
            for j in range(taus.size):
                if not conv[i, j]:
                    ax.add_patch(plt.Rectangle((taus[j] - dt_ / 2, widths[i] - dw / 2),
                                               dt_, dw, fill=False, hatch="///",
                                               edgecolor="w", lw=0.0))
    ax.set_xlabel(r"$\Gamma \tau$")
    family = meta.get("family", "")
    unit = {"rectangular": r"$\Gamma t_D$", "gaussian": r"$\Gamma \sigma$",
            "exponential": r"$\Gamma/\Gamma_{\mathrm{pulse}}$"}.get(family, "width")
    ax.set_ylabel(unit)
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> Path:
    """Render the figure and write it; returns the output path."""
    fig = _render_trajectories(spec) if spec.kind == "trajectories" \
        else _render_heatmap(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    # strip software/date metadata so re-rendering is byte-stable
    fig.savefig(out, metadata={"Software": None})
    plt.close(fig)
    return out
