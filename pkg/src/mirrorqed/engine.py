"""Kernel engine selection: compiled extension when available, numpy fallback.

The two engines implement the same algorithm on the same operands; they may
differ by floating-point reassociation only (different reduction trees).
Within one engine, results are bit-reproducible run to run.

Selection order:
  * MIRRORQED_ENGINE=python  forces the numpy fallback,
  * MIRRORQED_ENGINE=compiled requires the extension (ImportError otherwise),
  * default/auto: compiled if importable, else fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built; fallback keeps everything working
    _compiled = None

__all__ = ["get_engine", "engine_name", "available_engines"]


def available_engines() -> tuple:
    return ("compiled", "python") if _compiled is not None else ("python",)


def get_engine(name: str | None = None):
    """Return the kernel module for `name` (or the environment/auto choice)."""
    if name is None:
        name = os.environ.get("MIRRORQED_ENGINE", "auto")
    if name in ("auto", ""):
        return _compiled if _compiled is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels not built; install with the extension "
                              "or set MIRRORQED_ENGINE=python")
        return _compiled
    raise ValueError(f"unknown engine {name!r}")


def engine_name(mod) -> str:
    return "compiled" if (mod is not None and mod.__name__.endswith("_kernels")) else "python"
