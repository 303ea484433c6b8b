"""Batch figure rendering from floatwake CSV/JSON outputs."""

__version__ = "0.1.0"

from .jobs import FIGURE_IDS, FigureInputError, FigureJob, default_job, render
