"""Plain SVG 1.1 rendering of torus partitions.

Output depends only on the partition and the style, so rendering the same
partition twice gives byte-identical documents.
"""

from __future__ import annotations

import colorsys
import hashlib
from collections.abc import Sequence

from ..core.models import TorusPartition
from ..utils.artifacts import format_number

PREAMBLE = """\
<?xml version="1.0" encoding="UTF-8" standalone="no"?>
<svg width="{size}" height="{size}" viewBox="0 0 {size} {size}" version="1.1" \
xmlns="http://www.w3.org/2000/svg">
<title>{title}</title>
<rect x="0" y="0" width="{size}" height="{size}" style="fill:#ffffff;stroke:none"/>
"""

POSTAMBLE = "</svg>\n"

LINE_COLORS = {"V": "#1f4e9c", "H": "#9c1f1f", "D": "#1f7a3a"}
STYLES = ("lines", "shaded")


def coding_color(coding: str) -> str:
    """Stable fill color derived from the sha256 of a coding word."""
    digest = hashlib.sha256(coding.encode("ascii")).digest()
    hue = int.from_bytes(digest[:2], "big") / 65536.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.78, 0.55)
    return "#{:02x}{:02x}{:02x}".format(*(round(255 * t) for t in (r, g, b)))


class SVG:
    """Accumulates drawing commands on a square canvas of the unit torus."""

    def __init__(self, size: int = 800, digits: int = 15) -> None:
        self.size = size
        self.digits = digits
        self.commands: list[str] = []

    def _xy(self, x: float, y: float) -> str:
        px = format_number(self.size * x, self.digits)
        py = format_number(self.size * (1.0 - y), self.digits)
        return f"{px},{py}"

    def polygon(self, points: Sequence[tuple[float, float]], fill: str) -> None:
        coords = " ".join(self._xy(x, y) for x, y in points)
        self.commands.append(
            f'<polygon points="{coords}" style="fill:{fill};stroke:none"/>'
        )

    def line(self, start: tuple[float, float], end: tuple[float, float], color: str) -> None:
        self.commands.append(
            f'<polyline points="{self._xy(*start)} {self._xy(*end)}" '
            f'style="fill:none;stroke:{color};stroke-width:1"/>'
        )

    def render(self, title: str) -> str:
        body = "\n".join(self.commands)
        return PREAMBLE.format(size=self.size, title=title) + body + "\n" + POSTAMBLE


def _diagonal_segments(offset: float) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Pieces inside the unit square of the torus line x − y ≡ offset."""
    c = (-offset) % 1.0
    segments = [((0.0, c), (1.0 - c, 1.0))]
    if c > 0:
        segments.append(((1.0 - c, 0.0), (1.0, c)))
    return segments


def emit_svg(partition: TorusPartition, style: str = "lines", size: int = 800) -> str:
    """SVG document of a partition: line families, optionally cells shaded by coding.

    Raises:
        ValueError: If the style is unknown or shading is asked for R_ℓ
    """
    if style not in STYLES:
        raise ValueError(f"Unknown style '{style}', expected one of {', '.join(STYLES)}")
    svg = SVG(size)
    if style == "shaded":
        if not partition.include_diagonals:
            raise ValueError("Only P_ℓ cells carry codings to shade")
        for cell in partition.cells:
            svg.polygon(cell.vertices, coding_color(cell.coding))
    for x in partition.v_lines:
        svg.line((x, 0.0), (x, 1.0), LINE_COLORS["V"])
    for y in partition.h_lines:
        svg.line((0.0, y), (1.0, y), LINE_COLORS["H"])
    for offset in partition.d_lines:
        for start, end in _diagonal_segments(offset):
            svg.line(start, end, LINE_COLORS["D"])
    name = "P" if partition.include_diagonals else "R"
    return svg.render(f"{name}_{partition.ell}: {partition.card} cells")
