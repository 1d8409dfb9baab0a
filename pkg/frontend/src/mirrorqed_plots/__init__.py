"""Post-hoc figure generation for mirrorqed result files."""

from .figspec import FigureSpec, SchemaError, load_spec, read_result
from .render import render

__version__ = "0.1.0"
