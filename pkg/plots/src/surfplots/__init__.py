"""Figure rendering for surface-wave run directories.

Reads the CSV/JSON artifacts a run publishes and renders headless,
deterministic figures: conservation drift, spectra, determinant scans,
dispersion rays, and pair-kernel heatmaps.
"""

from .artifacts import (
    ArtifactError,
    RunArtifacts,
    load_conservation,
    load_delta_scan,
    load_dispersion,
    load_kernel_table,
    load_spectrum,
)
from .render import (
    plot_conservation,
    plot_delta_scan,
    plot_dispersion_line,
    plot_kernel_heatmap,
    plot_spectrum,
)

__all__ = [
    "ArtifactError",
    "RunArtifacts",
    "load_conservation",
    "load_delta_scan",
    "load_dispersion",
    "load_kernel_table",
    "load_spectrum",
    "plot_conservation",
    "plot_delta_scan",
    "plot_dispersion_line",
    "plot_kernel_heatmap",
    "plot_spectrum",
]

__version__ = "0.1.0"
