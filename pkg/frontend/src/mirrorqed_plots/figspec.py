"""Figure specifications: a small JSON contract over emitted result files.

    {
      "kind": "trajectories" | "heatmap",
      "inputs": ["run1.csv", ...],      # one sweep CSV for heatmap
      "labels": ["two photons", ...],   # optional, trajectories only
      "output": "figure.png",
      "title": "..."                    # optional
    }

The input files are the CSV formats documented by the simulator: a `# meta:`
header line, then `t,population` or `width,tau,steady_state,converged` rows.
This package reads those files only; it never imports the simulator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["FigureSpec", "load_spec", "read_result", "SchemaError"]

TRAJECTORY_HEADER = "t,population"
SWEEP_HEADER = "width,tau,steady_state,converged"


class SchemaError(ValueError):
    pass


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    labels: list = field(default_factory=list)
    title: str = ""


def load_spec(path) -> FigureSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read figure spec {path}: {exc}")
    kind = doc.get("kind")
    if kind not in ("trajectories", "heatmap"):
        raise SchemaError(f"kind must be 'trajectories' or 'heatmap', got {kind!r}")
    inputs = doc.get("inputs")
    if not inputs or not isinstance(inputs, list):
        raise SchemaError("inputs must be a non-empty list of CSV paths")
    if kind == "heatmap" and len(inputs) != 1:
        raise SchemaError("heatmap takes exactly one sweep CSV")
    output = doc.get("output")
    if not output:
        raise SchemaError("missing output image path")
    labels = doc.get("labels", [])
    if labels and len(labels) != len(inputs):
        raise SchemaError(f"{len(labels)} labels for {len(inputs)} inputs")
    base = Path(path).parent
    inputs = [str(p) if Path(p).is_absolute() else str(base / p) for p in inputs]
    outp = output if Path(output).is_absolute() else str(base / output)
    return FigureSpec(kind=kind, inputs=inputs, output=outp, labels=labels,
                      title=doc.get("title", ""))


def _parse_meta(line: str, path) -> dict:
    if not line.startswith("# meta:"):
        raise SchemaError(f"{path}: missing '# meta:' header line")
    meta = {}
    for tok in line[len("# meta:"):].split():
        k, _, v = tok.partition("=")
        try:
            meta[k] = float(v)
        except ValueError:
            meta[k] = v
    return meta


def read_result(path):
    """Parse an emitted CSV; returns ("trajectory"|"sweep", meta, data array)."""
    with open(path) as fh:
        meta = _parse_meta(fh.readline().strip(), path)
        header = fh.readline().strip()
        if header == TRAJECTORY_HEADER:
            kind = "trajectory"
        elif header == SWEEP_HEADER:
            kind = "sweep"
        else:
            raise SchemaError(f"{path}: unexpected column header {header!r}")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise SchemaError(f"{path}: malformed data rows: {exc}")
    if data.size == 0:
        raise SchemaError(f"{path}: no data rows")
    return kind, meta, data
