"""
Step and line plots rendered to self-contained SVG with matplotlib
"""

import csv
import io
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from matplotlib.figure import Figure

from utils.errors import DomainError

Number = Union[int, float, Fraction]

STEP_COLUMNS = ("t_from", "t_to", "psi_hi")
LINE_COLUMNS = ("nu", "G_nu_hi")
ORBIT_COLUMNS = ("nu", "x_hi", "y_num", "y_den", "f_hi")
CONVERGENT_COLUMNS = ("nu", "q")
DIGIT_COLUMNS = ("nu", "digit")
INDEX_COLUMNS = ("nu", "trial", "n", "t")


class StepPlot:
    """Horizontal steps and polylines on one labelled pair of axes"""

    def __init__(self, title: str = "", x_label: str = "t", y_label: str = "", log_x: bool = False):
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.log_x = log_x
        self.steps: List[Tuple[float, float, float]] = []
        self.lines: List[Tuple[str, List[float], List[float]]] = []
        self.guides: List[Tuple[str, float]] = []

    def add_step(self, start: Number, end: Number, height: Number):
        if end < start:
            raise DomainError(f"Step ends before it starts: [{start}, {end}]")
        self.steps.append((float(start), float(end), float(height)))

    def add_line(self, label: str, xs: Sequence[Number], ys: Sequence[Number]):
        if len(xs) != len(ys):
            raise DomainError("Line needs as many x values as y values")
        self.lines.append((label, [float(x) for x in xs], [float(y) for y in ys]))

    def add_guide(self, label: str, height: Number):
        """Dashed horizontal reference line"""
        self.guides.append((label, float(height)))

    def figure(self) -> Figure:
        fig = Figure(figsize=(8, 4.5))
        ax = fig.add_subplot(1, 1, 1)
        for k, (start, end, height) in enumerate(self.steps):
            ax.plot([start, end], [height, height], color="#1f77b4", linewidth=1.5, gid=f"step-{k}")
        for label, xs, ys in self.lines:
            ax.plot(xs, ys, linewidth=1.2, label=label, gid=f"line-{label}")
        for label, height in self.guides:
            ax.axhline(height, linestyle="--", color="#888888", linewidth=1, label=label)
        if self.log_x and (self.steps or self.lines):
            ax.set_xscale("log")
        ax.set_title(self.title)
        ax.set_xlabel(self.x_label)
        ax.set_ylabel(self.y_label)
        ax.grid(True, alpha=0.3)
        if self.lines or self.guides:
            ax.legend(loc="best")
        fig.tight_layout()
        return fig

    def render(self) -> str:
        """The plot as an SVG document"""
        buffer = io.StringIO()
        self.figure().savefig(buffer, format="svg")
        return buffer.getvalue()


def _read_rows(text: str) -> Tuple[List[str], List[dict]]:
    reader = csv.DictReader(io.StringIO(text))
    rows = list(reader)
    return list(reader.fieldnames or []), rows


def _has(header: List[str], columns: Sequence[str]) -> bool:
    return all(column in header for column in columns)


def _upper_columns(header: List[str], rows: List[dict], title: Optional[str]) -> StepPlot:
    """One line per *_hi column against the first index column, or the row number"""
    series = [column for column in header if column.endswith("_hi")]
    if not series:
        raise DomainError(f"Unrecognised trace columns: {header}")
    index = next((column for column in INDEX_COLUMNS if column in header), None)
    plot = StepPlot(title=title or ", ".join(series), x_label=index or "row", y_label="upper bound")
    for column in series:
        xs, ys = [], []
        for k, row in enumerate(rows, start=1):
            if not row.get(column):
                continue
            xs.append(Fraction(row[index]) if index else k)
            ys.append(Fraction(row[column]))
        plot.add_line(column, xs, ys)
    return plot


def plot_trace(text: str, title: Optional[str] = None) -> str:
    """
    SVG for any CSV the command line writes

    psi step rows (t_from, t_to, psi_hi) become steps, G_n rows (nu, G_nu_hi)
    the line G_n/n, convergent rows (nu, q) the line ln q_n / n, orbit rows
    the coordinates x, y and f, digit rows the digits themselves. Anything
    else with *_hi columns gets one line per column.
    """
    if not text.strip():
        return StepPlot(title=title or "empty trace").render()
    header, rows = _read_rows(text)
    try:
        if _has(header, STEP_COLUMNS):
            plot = StepPlot(title=title or "ψ_α(t)", x_label="t", y_label="ψ_α(t)")
            for row in rows:
                plot.add_step(Fraction(row["t_from"]), Fraction(row["t_to"]), Fraction(row["psi_hi"]))
            return plot.render()
        if _has(header, LINE_COLUMNS):
            plot = StepPlot(title=title or "G_n / n", x_label="n", y_label="G_n / n")
            xs = [int(row["nu"]) for row in rows]
            ys = [Fraction(row["G_nu_hi"]) / n for row, n in zip(rows, xs)]
            plot.add_line("G_n/n", xs, ys)
            return plot.render()
        if _has(header, ORBIT_COLUMNS):
            plot = StepPlot(title=title or "orbit", x_label="ν", y_label="")
            xs = [int(row["nu"]) for row in rows]
            plot.add_line("x", xs, [Fraction(row["x_hi"]) for row in rows])
            plot.add_line("y", xs, [Fraction(int(row["y_num"]), int(row["y_den"])) for row in rows])
            plot.add_line("f", xs, [Fraction(row["f_hi"]) for row in rows])
            return plot.render()
        if _has(header, CONVERGENT_COLUMNS):
            plot = StepPlot(title=title or "ln q_n / n", x_label="n", y_label="ln q_n / n")
            points = [(int(row["nu"]), int(row["q"])) for row in rows]
            points = [(nu, math.log(q) / nu) for nu, q in points if nu >= 1]
            plot.add_line("ln q_n/n", [nu for nu, _ in points], [y for _, y in points])
            return plot.render()
        if _has(header, DIGIT_COLUMNS):
            plot = StepPlot(title=title or "partial quotients", x_label="ν", y_label="a_ν")
            plot.add_line("a_ν", [int(row["nu"]) for row in rows], [int(row["digit"]) for row in rows])
            return plot.render()
        return _upper_columns(header, rows, title).render()
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise DomainError(f"Malformed trace row: {e}")


def line_count(svg: str) -> int:
    """Number of polylines drawn in an SVG produced by StepPlot"""
    return svg.count('id="line-')


def step_count(svg: str) -> int:
    """Number of steps drawn in an SVG produced by StepPlot"""
    return svg.count('id="step-')

