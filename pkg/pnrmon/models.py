# SPDX-License-Identifier: MIT
"""A module containing base classes for models and controllers.

A model owns a JSON file, a controller runs the work described by the model
and a figure model renders the results.

Examples
-------- ::

    class ClassModel(Model):
        def __init__(self, path: Path) -> None:
            super().__init__(path)

    class ClassController(Controller):
        def __init__(self, model: Model) -> None:
            super().__init__(model)

    class ClassFigureModel(FigureModel):
        @property
        def plot_spec(self) -> PlotSpec:
            return PlotSpec(title="...")
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Sequence

from .console import Console
from .figures import PlotSpec, emit_figure

if TYPE_CHECKING:
    from .experiments import ResultTable


class Model(ABC):
    """Base class for Model classes.

    Attributes
    ----------
    path: :class:`Path`
        Path to the JSON file. Its object is loaded on creation.
    """

    __slots__ = ("_data", "_path")

    _data: dict[str, Any]
    _path: Path

    def __init__(self, path: Path) -> None:
        self._path = path
        self._load_settings()

    @property
    def _settings_path(self) -> Path:
        return self._path

    def _load_settings(self) -> None:
        with open(self._settings_path, "r", encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise TypeError(f"'{self._settings_path}' must contain a JSON object")
        self._data = data

    @property
    def path(self) -> Path:
        """Path to the JSON file."""
        return self._settings_path


@dataclass(slots=True)
class Controller(ABC):
    """Base class for Controller classes.

    Attributes
    ----------
    model: :class:`.Model`
        The model of the function.
    """

    model: Model


@dataclass(slots=True)
class FigureModel(ABC):
    """Base class for FigureModel classes.

    Attributes
    ----------
    model: :class:`.Model`
        The model of the function.
    """

    model: Model

    @property
    @abstractmethod
    def plot_spec(self) -> PlotSpec:
        """The title, labels and axes of the figure."""

    @property
    def figure_name(self) -> str:
        """The file name of the figure, without extension."""
        return self.model.path.stem

    def generate_figure(self, tables: Sequence[ResultTable]) -> str:
        """Renders the result tables as an SVG document."""
        return emit_figure(tables, self.plot_spec)


class ControllerWithFigure(Controller, ABC):
    """Class for Controller classes which also produce a figure.

    Attributes
    ----------
    model: :class:`.Model`
        Model of the function.
    figure_model: :class:`FigureModel`
        Model of the figure.
    """

    figure_model: FigureModel
    model: Model

    def __init__(self, model: Model, figure_model: FigureModel) -> None:
        super().__init__(model)
        self.figure_model = figure_model

    def save_figure(self, tables: Sequence[ResultTable], out_dir: Path) -> Path:
        """Saves the figure of the tables as `<out_dir>/<figure_name>.svg`.

        Returns
        -------
        :class:`Path`
            Path of the saved figure.
        """
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{self.figure_model.figure_name}.svg"
        svg = self.figure_model.generate_figure(tables)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(svg)
        Console.info(f"Figure saved to '{path}'.")
        return path
