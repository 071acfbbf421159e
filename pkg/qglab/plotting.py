"""
Plot data and SVG figures for convergence sweeps.

Figures are rendered with the Agg backend into SVG text with a fixed hash
salt and no date metadata, so regenerated files are byte-identical.
"""
import io
import logging
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from .rates import fitted_line
from .types import SlopeFit

logger = logging.getLogger(__name__)

SVG_SETTINGS = {
    "svg.hashsalt": "qglab",
    "svg.fonttype": "none",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 5,
}


def plot_data(fit: SlopeFit) -> pd.DataFrame:
    """
    Plot data of a fit: x = ell, y = measured value, plus the fitted line.

    Returns:
        pd.DataFrame: Columns series, ell, value, fitted
    """
    x = np.asarray(fit.x, dtype=float)
    return pd.DataFrame(
        {
            "series": fit.name,
            "ell": x,
            "value": np.asarray(fit.y, dtype=float),
            "fitted": fitted_line(fit, x),
        }
    )


def _render(fig: Figure) -> str:
    buffer = io.StringIO()
    with matplotlib.rc_context(SVG_SETTINGS):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def convergence_svg(frames: Sequence[pd.DataFrame], fits: Dict[str, SlopeFit], title: Optional[str] = None) -> str:
    """
    Log-log figure of one or more plot data frames.

    Args:
        frames (Sequence[pd.DataFrame]): Frames built by plot_data
        fits (Dict[str, SlopeFit]): Fits by series name, used for legend labels
        title (Optional[str]): Figure title

    Returns:
        str: SVG document
    """
    with matplotlib.rc_context(SVG_SETTINGS):
        fig = Figure(figsize=(6.0, 4.0))
        ax = fig.add_subplot()
        for frame in frames:
            name = str(frame["series"].iloc[0]) if len(frame) else "series"
            fit = fits.get(name)
            usable = frame[(frame["value"] > 0) & np.isfinite(frame["value"])]
            if usable.empty:
                continue
            (points,) = ax.plot(usable["ell"], usable["value"], "o", label=name)
            if fit is not None and fit.slope is not None:
                ax.plot(
                    usable["ell"], usable["fitted"], "--", color=points.get_color(),
                    label=f"slope {fit.slope:.3f} ± {fit.stderr:.3f}",
                )
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("ell")
        ax.set_ylabel("measured norm")
        if title:
            ax.set_title(title)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        return _render(fig)


def spectra_svg(frame: pd.DataFrame, title: Optional[str] = None) -> str:
    """
    Eigenvalues against ell, one curve per (operator, index).

    Args:
        frame (pd.DataFrame): Columns ell, operator_label, index, eigenvalue
        title (Optional[str]): Figure title

    Returns:
        str: SVG document
    """
    with matplotlib.rc_context(SVG_SETTINGS):
        fig = Figure(figsize=(6.0, 4.0))
        ax = fig.add_subplot()
        for (label, index), group in frame.groupby(["operator_label", "index"], sort=True):
            group = group.sort_values("ell")
            ax.plot(group["ell"], group["eigenvalue"], "o-", label=f"{label} #{index}")
        ax.set_xscale("log")
        ax.set_xlabel("ell")
        ax.set_ylabel("eigenvalue")
        if title:
            ax.set_title(title)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(loc="best", fontsize=7, ncol=2)
        fig.tight_layout()
        return _render(fig)
