"""Rendering for mtscomb experiment CSV output."""

from .render import fit_slope, plot_scaling, plot_trace
from .summary import SchemaError, load_summary, load_trace

__version__ = "0.1.0"
