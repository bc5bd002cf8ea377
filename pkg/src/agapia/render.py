"""ASCII and SVG renderers for scenarios.

The ASCII renderer draws one character per cell with the border values of a
selected region annotated; the SVG renderer lays the grid out as boxes with
the cell letter centered and border data along the outer edges.
"""

from __future__ import annotations

from html import escape

from .iface import is_nil_value, value_to_str
from .scenario import Scenario


def render_ascii(s: Scenario, values: bool = True) -> str:
    """Grid of cell letters, with outer border annotations when values=True."""
    if s.rows == 0:
        return "(empty scenario)\n"
    lines = []
    if values:
        north = "  " + " ".join(_mark(c.north) for c in s.cells[0])
        lines.append(north)
    for r, row in enumerate(s.cells):
        left = _mark(row[0].west) if values else " "
        right = _mark(row[-1].east) if values else " "
        lines.append(f"{left} " + " ".join(c.label[:1] or "?" for c in row) + f" {right}")
    if values:
        south = "  " + " ".join(_mark(c.south) for c in s.cells[-1])
        lines.append(south)
        lines.append("")
        lines.append("west:  " + "; ".join(value_to_str(v) for v in s.west_border()))
        lines.append("north: " + "; ".join(value_to_str(v) for v in s.north_border()))
        lines.append("east:  " + "; ".join(value_to_str(v) for v in s.east_border()))
        lines.append("south: " + "; ".join(value_to_str(v) for v in s.south_border()))
    return "\n".join(lines) + "\n"


def _mark(v) -> str:
    return "." if is_nil_value(v) else "*"


CELL = 46
PAD = 120


def render_svg(s: Scenario, max_label: int = 26) -> str:
    """Standalone SVG: one box per cell, outer border values annotated."""
    w = s.cols * CELL + 2 * PAD
    h = s.rows * CELL + 2 * PAD
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="monospace" font-size="11">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for r, row in enumerate(s.cells):
        for c, cell in enumerate(row):
            x, y = PAD + c * CELL, PAD + r * CELL
            fill = "#f2f2f2" if cell.label in "-IL<>" else "#dce9f7"
            out.append(
                f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                f'fill="{fill}" stroke="#555"/>'
            )
            out.append(
                f'<text x="{x + CELL / 2}" y="{y + CELL / 2 + 4}" text-anchor="middle" '
                f'font-size="14">{escape(cell.label[:1])}</text>'
            )
    def clip(v):
        t = value_to_str(v)
        return escape(t if len(t) <= max_label else t[: max_label - 1] + "…")

    for c, cell in enumerate(s.cells[0] if s.rows else []):
        if not is_nil_value(cell.north):
            x = PAD + c * CELL + CELL / 2
            out.append(
                f'<text x="{x}" y="{PAD - 8}" text-anchor="middle" fill="#7a2048" '
                f'transform="rotate(-40 {x} {PAD - 8})">{clip(cell.north)}</text>'
            )
    for c, cell in enumerate(s.cells[-1] if s.rows else []):
        if not is_nil_value(cell.south):
            x = PAD + c * CELL + CELL / 2
            y = PAD + s.rows * CELL + 16
            out.append(
                f'<text x="{x}" y="{y}" text-anchor="middle" fill="#7a2048" '
                f'transform="rotate(-40 {x} {y})">{clip(cell.south)}</text>'
            )
    for r in range(s.rows):
        west = s.cells[r][0].west
        east = s.cells[r][-1].east
        y = PAD + r * CELL + CELL / 2 + 4
        if not is_nil_value(west):
            out.append(f'<text x="{PAD - 8}" y="{y}" text-anchor="end" fill="#1f4e79">{clip(west)}</text>')
        if not is_nil_value(east):
            x = PAD + s.cols * CELL + 8
            out.append(f'<text x="{x}" y="{y}" fill="#1f4e79">{clip(east)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
