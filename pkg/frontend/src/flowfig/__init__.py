"""flowfig: batch figure rendering for training-run artifact files."""

from .formats import ArtifactError, read_matrix, read_rounds, read_spectra
from .render import DPI, HEATMAP_CMAP, KINDS, FigureSpec, render

__version__ = "0.1.0"

__all__ = [
    "ArtifactError",
    "DPI",
    "FigureSpec",
    "HEATMAP_CMAP",
    "KINDS",
    "read_matrix",
    "read_rounds",
    "read_spectra",
    "render",
    "__version__",
]
