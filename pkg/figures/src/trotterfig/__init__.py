"""Figure panels for simulation run directories (manifest + CSV contract)."""

from .data import DataError, MissingSeriesError, RunDir, load_run, read_trajectory_csv
from .panels import PANELS
from .render import FigureSpec, render

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "MissingSeriesError",
    "RunDir",
    "load_run",
    "read_trajectory_csv",
    "PANELS",
    "FigureSpec",
    "render",
    "__version__",
]
