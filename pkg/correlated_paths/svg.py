"""Render a report as an SVG line plot of estimates against psi."""

import logging
import math
import os

import svgwrite

logger = logging.getLogger(__name__)

MARKER_METRICS = ("psi_min",)


class RiskCurveSVG:
    """Use this class to render a report as a single-file SVG plot.

    Every plotted metric becomes one polyline of its estimates; theory values are overlaid as
    dashed line segments and the ``psi_min`` marker as a vertical line.
    """

    BORDER_WIDTH = 10
    PLOT_WIDTH = 640
    PLOT_HEIGHT = 400
    GRID_OFFSET = 60
    TEXT_LINE_HEIGHT = 16
    LEGEND_WIDTH = 180
    Y_TICKS = 5

    def __init__(self, report):
        """
        Initialize a RiskCurveSVG.

        Args:
            report (Report): Report whose rows are plotted.
        """
        self.report = report
        self.metrics = []
        for row in report.rows:
            if row.metric not in self.metrics and row.metric not in MARKER_METRICS:
                self.metrics.append(row.metric)
        self.psi_values = sorted({row.psi for row in report.rows})
        values = [row.estimate for row in report.rows if row.metric in self.metrics]
        values += [row.theory for row in report.rows if row.metric in self.metrics and row.theory is not None]
        finite = [value for value in values if math.isfinite(value)]
        self.y_min = min([0.0, *finite])
        self.y_max = max([1.0, *finite])

    def _x(self, psi):
        low, high = self.psi_values[0], self.psi_values[-1]
        span = high - low or 1.0
        return self.GRID_OFFSET + (psi - low) / span * self.PLOT_WIDTH

    def _y(self, value):
        span = self.y_max - self.y_min or 1.0
        return self.GRID_OFFSET + (self.y_max - value) / span * self.PLOT_HEIGHT

    def _setup_drawing(self, width, depth):
        """Initialize an appropriate svgwrite.Drawing instance."""
        drawing = svgwrite.Drawing(size=(width, depth), debug=False)
        drawing.viewbox(0, 0, width=width, height=depth)

        css_path = os.path.join(os.path.dirname(__file__), "static", "css", "svg.css")
        with open(css_path, "r", encoding="utf-8") as css_file:
            drawing.defs.add(drawing.style(css_file.read()))

        border_offset = self.BORDER_WIDTH / 2
        drawing.add(
            drawing.rect(
                insert=(border_offset, border_offset),
                size=(width - self.BORDER_WIDTH, depth - self.BORDER_WIDTH),
                class_="frame",
            )
        )
        return drawing

    def _draw_grid_lines(self, drawing):
        """Draw one vertical line per psi and evenly spaced horizontal lines."""
        for psi in self.psi_values:
            drawing.add(
                drawing.line(
                    start=(self._x(psi), self.GRID_OFFSET),
                    end=(self._x(psi), self.GRID_OFFSET + self.PLOT_HEIGHT),
                    class_="grid",
                )
            )
        for tick in range(self.Y_TICKS + 1):
            y = self.GRID_OFFSET + tick * self.PLOT_HEIGHT / self.Y_TICKS
            drawing.add(
                drawing.line(start=(self.GRID_OFFSET, y), end=(self.GRID_OFFSET + self.PLOT_WIDTH, y), class_="grid")
            )

    def _draw_axis_labels(self, drawing):
        """Label psi values along the bottom and estimate values along the left side."""
        bottom = self.GRID_OFFSET + self.PLOT_HEIGHT
        for psi in self.psi_values:
            insert = (self._x(psi), bottom + self.TEXT_LINE_HEIGHT)
            drawing.add(drawing.text(f"{psi:g}", insert=insert, class_="grid-label"))
        for tick in range(self.Y_TICKS + 1):
            value = self.y_max - tick * (self.y_max - self.y_min) / self.Y_TICKS
            drawing.add(
                drawing.text(
                    f"{value:.2g}",
                    insert=(self.GRID_OFFSET / 2, self._y(value) + self.TEXT_LINE_HEIGHT / 4),
                    class_="grid-label",
                )
            )
        drawing.add(
            drawing.text(
                "psi",
                insert=(self.GRID_OFFSET + self.PLOT_WIDTH / 2, bottom + 2.5 * self.TEXT_LINE_HEIGHT),
                class_="axis-title",
            )
        )
        drawing.add(
            drawing.text(
                self.report.kind.replace("_", " "),
                insert=(self.GRID_OFFSET + self.PLOT_WIDTH / 2, self.GRID_OFFSET / 2),
                class_="axis-title",
            )
        )

    def _draw_metric(self, drawing, metric):
        """Draw the estimate polyline of one metric and its theory overlay."""
        rows = self.report.metric_rows(metric)
        points = [(self._x(row.psi), self._y(row.estimate)) for row in rows]
        drawing.add(drawing.polyline(points=points, class_=f"metric metric-{metric}"))
        theory = [(self._x(row.psi), self._y(row.theory)) for row in rows if row.theory is not None]
        for start, end in zip(theory, theory[1:]):
            drawing.add(drawing.line(start=start, end=end, class_=f"theory metric-{metric}"))
        if len(theory) == 1:
            x, y = theory[0]
            drawing.add(drawing.line(start=(x - 6, y), end=(x + 6, y), class_=f"theory metric-{metric}"))

    def _draw_markers(self, drawing):
        """Draw a vertical line at psi_min when it falls inside the plotted range."""
        rows = [row for row in self.report.rows if row.metric in MARKER_METRICS]
        if not rows:
            return
        psi = rows[0].estimate
        if self.psi_values[0] <= psi <= self.psi_values[-1]:
            drawing.add(
                drawing.line(
                    start=(self._x(psi), self.GRID_OFFSET),
                    end=(self._x(psi), self.GRID_OFFSET + self.PLOT_HEIGHT),
                    class_="marker",
                )
            )

    def _draw_legend(self, drawing):
        """List the metrics to the right of the plot."""
        left = self.GRID_OFFSET + self.PLOT_WIDTH + self.TEXT_LINE_HEIGHT
        for index, metric in enumerate(self.metrics):
            y = self.GRID_OFFSET + index * self.TEXT_LINE_HEIGHT * 1.5
            drawing.add(drawing.line(start=(left, y), end=(left + 20, y), class_=f"metric-{metric} axis"))
            drawing.add(drawing.text(metric, insert=(left + 26, y + 4), class_="legend-text"))

    def render(self):
        """Generate an SVG document of the report."""
        logger.debug("Setting up drawing...")
        drawing = self._setup_drawing(
            width=self.GRID_OFFSET * 2 + self.PLOT_WIDTH + self.LEGEND_WIDTH,
            depth=self.GRID_OFFSET * 2 + self.PLOT_HEIGHT + self.TEXT_LINE_HEIGHT,
        )
        if not self.psi_values:
            logger.warning("Report has no rows; rendering an empty plot")
            return drawing
        self._draw_grid_lines(drawing)
        self._draw_axis_labels(drawing)
        self._draw_markers(drawing)
        for metric in self.metrics:
            self._draw_metric(drawing, metric)
        self._draw_legend(drawing)
        logger.debug("Drawing rendered!")
        return drawing
