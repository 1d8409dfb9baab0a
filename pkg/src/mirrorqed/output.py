"""Machine-readable result files.

Trajectory CSV:  one `# meta:` header line (sorted key=value pairs), then a
`t,population` header and one row per step time.  Sweep CSV: same meta line,
`width,tau,steady_state,converged` rows in row-major (width outer) order.
JSON mirrors both.  Numbers are written with 12 significant digits and LF
line endings, so identical runs emit byte-identical files.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .experiments import SweepResult, Trajectory

__all__ = ["format_number", "trajectory_csv", "sweep_csv", "emit", "read_trajectory_csv",
           "read_sweep_csv"]


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.11e}"


def _meta_line(meta: dict) -> str:
    parts = []
    for k in sorted(meta):
        v = meta[k]
        if isinstance(v, str):
            parts.append(f"{k}={v}")
        else:
            parts.append(f"{k}={format_number(v)}")
    return "# meta: " + " ".join(parts)


def trajectory_csv(traj: Trajectory) -> str:
    lines = [_meta_line(traj.meta()), "t,population"]
    for t, p in zip(traj.times, traj.population):
        lines.append(f"{format_number(t)},{format_number(p)}")
    return "\n".join(lines) + "\n"


def trajectory_json(traj: Trajectory) -> str:
    doc = {"meta": {k: v for k, v in traj.meta().items()},
           "t": [float(x) for x in traj.times],
           "population": [float(x) for x in traj.population]}
    return json.dumps(doc, sort_keys=True, indent=None, separators=(",", ":")) + "\n"


def sweep_meta(res: SweepResult) -> dict:
    m = {"family": res.family, "n_widths": len(res.widths), "n_taus": len(res.taus)}
    m.update(res.params.describe())
    m.pop("tau", None)   # swept, not fixed
    m.update({k: v for k, v in res.meta.items()})
    return m


def sweep_csv(res: SweepResult) -> str:
    lines = [_meta_line(sweep_meta(res)), "width,tau,steady_state,converged"]
    for i, wdt in enumerate(res.widths):
        for j, tau in enumerate(res.taus):
            lines.append(",".join([format_number(wdt), format_number(tau),
                                   format_number(res.steady_state[i, j]),
                                   "1" if res.converged[i, j] else "0"]))
    return "\n".join(lines) + "\n"


def sweep_json(res: SweepResult) -> str:
    doc = {"meta": sweep_meta(res),
           "widths": [float(x) for x in res.widths],
           "taus": [float(x) for x in res.taus],
           "steady_state": [[float(x) for x in row] for row in res.steady_state],
           "converged": [[bool(x) for x in row] for row in res.converged]}
    return json.dumps(doc, sort_keys=True, indent=None, separators=(",", ":")) + "\n"


def emit(obj, path: str, fmt: str = "csv") -> Path:
    """Write a Trajectory or SweepResult; returns the resolved path.

    MIRRORQED_OUTDIR, when set, overrides the directory part of `path`.
    """
    outdir = os.environ.get("MIRRORQED_OUTDIR")
    p = Path(path)
    if outdir:
        p = Path(outdir) / p.name
    p.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, Trajectory):
        text = trajectory_csv(obj) if fmt == "csv" else trajectory_json(obj)
    elif isinstance(obj, SweepResult):
        text = sweep_csv(obj) if fmt == "csv" else sweep_json(obj)
    else:
        raise TypeError(f"cannot emit {type(obj).__name__}")
    with open(p, "w", newline="\n") as fh:
        fh.write(text)
    return p


def _parse_meta(line: str) -> dict:
    if not line.startswith("# meta:"):
        raise ValueError("missing '# meta:' header line")
    meta = {}
    for tok in line[len("# meta:"):].split():
        k, _, v = tok.partition("=")
        try:
            meta[k] = float(v)
        except ValueError:
            meta[k] = v
    return meta


def read_trajectory_csv(path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Parse an emitted trajectory file back into (meta, t, population)."""
    with open(path) as fh:
        meta = _parse_meta(fh.readline().strip())
        header = fh.readline().strip()
        if header != "t,population":
            raise ValueError(f"unexpected column header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return meta, data[:, 0], data[:, 1]


def read_sweep_csv(path) -> tuple[dict, np.ndarray]:
    """Parse an emitted sweep file into (meta, rows[width,tau,ss,converged])."""
    with open(path) as fh:
        meta = _parse_meta(fh.readline().strip())
        header = fh.readline().strip()
        if header != "width,tau,steady_state,converged":
            raise ValueError(f"unexpected column header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return meta, data
