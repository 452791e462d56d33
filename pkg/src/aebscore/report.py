"""Report rendering: scenario-score tables and relativity matrices.

Score tables put scenarios in rows and vehicles in columns; each cell shows
``mean±std`` trimmed to two decimals, or ``NA`` where the protocol does not
license the (scenario, light) instance. Matrix tables are ranked best to
worst in both dimensions; cells show the relative score as a percentage with
two decimals, a literal ``inf`` for comparisons against a zero score, and
``0.00%`` on the diagonal.

CSV is the authoritative output; markdown and HTML are presentational (the
HTML matrices add a red-green diverging shade anchored at zero).
"""

from __future__ import annotations

import csv
import html
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .aggregate import METRIC_FREQ, RelativityMatrix
from .campaign import CompletionStats, vehicle_sort_key
from .protocol import ProtocolDefinition
from .scoring import ScenarioScore, ScoreValue

FORMATS = ("csv", "markdown", "html")
EXTENSIONS = {"csv": "csv", "markdown": "md", "html": "html"}

NA_CELL = "NA"
INF_CELL = "inf"


def format_number(value: float) -> str:
    """Two decimals with trailing zeros trimmed: 0.9, 0.07, 0, 1."""
    rounded = round(value, 2)
    if rounded == 0:
        return "0"
    text = f"{rounded:.2f}".rstrip("0").rstrip(".")
    return text


def format_score_cell(score: ScoreValue | None) -> str:
    if score is None:
        return NA_CELL
    return f"{format_number(score.mean)}±{format_number(score.std)}"


def format_percent_cell(value: float) -> str:
    if math.isinf(value):
        return INF_CELL
    return f"{value * 100.0:.2f}%"


def parse_score_cell(cell: str) -> tuple[float, float] | None:
    if cell == NA_CELL:
        return None
    mean_text, std_text = cell.split("±")
    return float(mean_text), float(std_text)


def parse_percent_cell(cell: str) -> float:
    if cell == INF_CELL:
        return math.inf
    if not cell.endswith("%"):
        raise ValueError(f"not a percent cell: {cell!r}")
    return float(cell[:-1]) / 100.0


@dataclass(frozen=True)
class Table:
    """A rendered-table skeleton: title, corner label, headers, rows."""

    title: str
    corner: str
    columns: tuple[str, ...]
    rows: tuple[tuple[str, tuple[str, ...]], ...]
    shading: Mapping[tuple[str, str], str] | None = None  # (row, col) -> css color


def score_table(
    scores: Iterable[ScenarioScore],
    protocol: ProtocolDefinition,
    metric: str,
    light: str,
    region: str,
) -> Table:
    """Appendix-style scenario/vehicle grid of mean±std cells for one light."""
    relevant = [s for s in scores if s.light == light]
    vehicles = sorted({s.vehicle for s in relevant}, key=vehicle_sort_key)
    by_key = {(s.scenario, s.vehicle): s for s in relevant}
    rows = []
    for spec in protocol.scenarios:
        cells = []
        for vehicle in vehicles:
            score = by_key.get((spec.code, vehicle))
            value = None
            if score is not None and not score.not_applicable:
                value = score.fs if metric == METRIC_FREQ else score.mps
            cells.append(format_score_cell(value))
        rows.append((spec.code, tuple(cells)))
    name = "FREQ_SCORE_MEAN" if metric == METRIC_FREQ else "MIT_POW"
    title = f"{name}_{light.upper()}_{region.upper()}"
    return Table(title=title, corner="MODEL", columns=tuple(vehicles), rows=tuple(rows))


def matrix_table(matrix: RelativityMatrix) -> Table:
    """Ranked pairwise relativity grid with diverging shading for HTML."""
    rows = []
    shading: dict[tuple[str, str], str] = {}
    for x in matrix.order:
        cells = []
        for y in matrix.order:
            value = matrix.cell(x, y)
            cells.append(format_percent_cell(value))
            shading[(x, y)] = _diverging_color(value)
        rows.append((x, tuple(cells)))
    metric_name = "FREQ" if matrix.metric == METRIC_FREQ else "MP"
    title = f"REL_{metric_name}_{matrix.group.value}_{matrix.region.upper()}"
    return Table(
        title=title,
        corner="",
        columns=matrix.order,
        rows=tuple(rows),
        shading=shading,
    )


def completion_table(stats: Mapping[str, CompletionStats]) -> Table:
    rows = []
    for vehicle in sorted(stats, key=vehicle_sort_key):
        s = stats[vehicle]
        rows.append(
            (vehicle, (str(s.expected), str(s.executed), str(s.judged), f"{s.completion_percent}%"))
        )
    return Table(
        title="COMPLETION",
        corner="vehicle",
        columns=("expected", "executed", "judged", "completion_percent"),
        rows=tuple(rows),
    )


def _diverging_color(value: float) -> str:
    """White at zero, saturating to green at +100% and red at -100%."""
    if math.isinf(value):
        t = 1.0
    else:
        t = max(-1.0, min(1.0, value))
    if t >= 0:
        r, g, b = (int(255 - 155 * t), 255, int(255 - 155 * t))
    else:
        r, g, b = (255, int(255 + 155 * t), int(255 + 155 * t))
    return f"#{r:02x}{g:02x}{b:02x}"


def render(table: Table, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(table)
    if fmt == "markdown":
        return to_markdown(table)
    if fmt == "html":
        return to_html(table)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def to_csv(table: Table) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([table.title] + [""] * len(table.columns))
    writer.writerow([table.corner, *table.columns])
    for label, cells in table.rows:
        writer.writerow([label, *cells])
    return buffer.getvalue()


def parse_csv(text: str) -> Table:
    rows = list(csv.reader(io.StringIO(text)))
    title = rows[0][0]
    corner, *columns = rows[1]
    body = tuple((r[0], tuple(r[1:])) for r in rows[2:])
    return Table(title=title, corner=corner, columns=tuple(columns), rows=body)


def to_markdown(table: Table) -> str:
    lines = [f"## {table.title}", ""]
    lines.append("| " + " | ".join([table.corner, *table.columns]) + " |")
    lines.append("|" + "---|" * (len(table.columns) + 1))
    for label, cells in table.rows:
        lines.append("| " + " | ".join([label, *cells]) + " |")
    return "\n".join(lines) + "\n"


def to_html(table: Table) -> str:
    parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset=\"utf-8\">",
        f"<title>{html.escape(table.title)}</title>",
        "<style>",
        "table { border-collapse: collapse; font-family: sans-serif; }",
        "th, td { border: 1px solid #999; padding: 4px 8px; text-align: right; }",
        "th { background: #eee; }",
        "</style></head><body>",
        f"<h1>{html.escape(table.title)}</h1>",
        "<table>",
        "<tr>"
        + "".join(f"<th>{html.escape(h)}</th>" for h in (table.corner, *table.columns))
        + "</tr>",
    ]
    for label, cells in table.rows:
        cols = [f"<th>{html.escape(label)}</th>"]
        for header, cell in zip(table.columns, cells):
            style = ""
            if table.shading is not None:
                color = table.shading.get((label, header))
                if color:
                    style = f" style=\"background-color:{color}\""
            cols.append(f"<td{style}>{html.escape(cell)}</td>")
        parts.append("<tr>" + "".join(cols) + "</tr>")
    parts.append("</table></body></html>")
    return "\n".join(parts) + "\n"
