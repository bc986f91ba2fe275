"""Post-processing for eetlab sweep CSVs: edge-time figures and summary
tables. Consumes only the CSV interfaces of the core package; every plotted
point traces back to a CSV row."""

__version__ = "0.1.0"

from .figures import FigureSpec, figure_structure, render_fig3
from .tables import render_table1

__all__ = ["FigureSpec", "figure_structure", "render_fig3", "render_table1"]
