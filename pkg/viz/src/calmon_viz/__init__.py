"""Figure rendering for calmon CSV outputs."""

from .plots import (
    SchemaError,
    plot_density_compare,
    plot_heatmap,
    plot_pit_hist,
    plot_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "SchemaError",
    "plot_density_compare",
    "plot_heatmap",
    "plot_pit_hist",
    "plot_trajectory",
]
