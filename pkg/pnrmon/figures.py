# SPDX-License-Identifier: MIT
"""A module for rendering key-rate curves as SVG documents.

The figure is a convenience view of the CSV output: one series per result
table, key rate on a log axis against distance. Zero rates cannot be shown
on a log axis and are left out.

Rendering uses the object-oriented matplotlib API (no pyplot state), with
a fixed SVG hash salt and no date metadata, so equal input gives equal bytes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Any, Mapping, Protocol, Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .errors import FigureError

matplotlib.use("Agg")

_GOLDEN_MEAN = (np.sqrt(5) - 1.0) / 2.0
_FIG_WIDTH = 6.4

STYLE: dict[str, Any] = {
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.family": "sans-serif",
    "font.sans-serif": ["DejaVu Sans"],
    "font.size": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 2.5,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "svg.fonttype": "none",
    "svg.hashsalt": "pnrmon",
}


class RateSeries(Protocol):
    """Anything with a legend label and a rate per distance."""

    @property
    def label(self) -> str:
        """The legend label."""

    @property
    def distances(self) -> Sequence[float]:
        """The distances in km."""

    @property
    def rates(self) -> Sequence[float]:
        """The key rates in bits per pulse."""


@dataclass(slots=True, frozen=True)
class PlotSpec:
    """Title, axis labels and limits of a key-rate figure."""

    title: str = ""
    xlabel: str = "Distance (km)"
    ylabel: str = "Key rate (bits per pulse)"
    y_min: float | None = None
    y_max: float | None = None

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PlotSpec:
        """Creates the spec from the ``plot`` section of a config."""
        return cls(
            title=str(data.get("title", "")),
            xlabel=str(data.get("xlabel", cls.xlabel)),
            ylabel=str(data.get("ylabel", cls.ylabel)),
            y_min=data.get("y_min"),
            y_max=data.get("y_max"),
        )


def emit_figure(tables: Sequence[RateSeries], spec: PlotSpec) -> str:
    """Renders the rate-vs-distance curves of the tables.

    Raises
    ------
    FigureError
        No tables were given.
    """
    if not tables:
        raise FigureError("at least one result table is needed")

    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(_FIG_WIDTH, _FIG_WIDTH * _GOLDEN_MEAN))
        ax = fig.add_subplot()

        any_positive = False
        for table in tables:
            x = np.asarray(table.distances, dtype=float)
            y = np.asarray(table.rates, dtype=float)
            keep = y > 0
            label = table.label if keep.any() else f"{table.label} (no key)"
            any_positive |= bool(keep.any())
            ax.plot(x[keep], y[keep], marker="o", label=label)

        ax.set_yscale("log")
        if not any_positive:
            ax.set_ylim(1e-8, 1e-2)
        if spec.y_min is not None or spec.y_max is not None:
            ax.set_ylim(bottom=spec.y_min, top=spec.y_max)
        ax.set_xlabel(spec.xlabel)
        ax.set_ylabel(spec.ylabel)
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(loc="upper right")
        fig.tight_layout()

        buffer = io.StringIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()
