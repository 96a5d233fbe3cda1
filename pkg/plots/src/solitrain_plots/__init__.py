"""Read-only figure generation from solitrain run artifacts."""

from .figures import FigureRequest, make_figure, plot_decay, plot_regions, plot_snapshot
from .readers import read_nlsf, read_norm_csv, read_report

__all__ = [
    "FigureRequest",
    "make_figure",
    "plot_decay",
    "plot_regions",
    "plot_snapshot",
    "read_nlsf",
    "read_norm_csv",
    "read_report",
]
