"""Offline figure rendering for smoothot experiment outputs."""

from .figures import FIGURE_KINDS, FigureRequest, render
from .reader import SCHEMA_VERSION, SchemaError, band_quantiles, read_table

__version__ = "0.1.0"
