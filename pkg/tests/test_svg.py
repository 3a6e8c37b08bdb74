"""Tests for SVG rendering of partitions."""

import re

import pytest

from src.cocycle_lab.core.dynamics import make_rotation
from src.cocycle_lab.core.partition import build_partition
from src.cocycle_lab.output.svg import coding_color, emit_svg


@pytest.fixture
def partition():
    return build_partition(make_rotation("sqrt(2), e"), 3)


class TestEmitSvg:
    """Test SVG documents of torus partitions."""

    def test_deterministic(self, partition):
        """Test rendering twice gives the same document."""
        assert emit_svg(partition) == emit_svg(partition)

    def test_document_shape(self, partition):
        """Test the canvas size and title."""
        text = emit_svg(partition, size=400)
        assert text.startswith("<?xml")
        assert 'width="400"' in text
        assert "<title>P_3: 24 cells</title>" in text
        assert text.endswith("</svg>\n")

    def test_line_count(self, partition):
        """Test one polyline per axis line and one or two per diagonal."""
        text = emit_svg(partition)
        lines = text.count("<polyline")
        assert 3 + 3 + 3 <= lines <= 3 + 3 + 6

    def test_shaded_cells(self, partition):
        """Test the shaded style draws one polygon per cell."""
        assert emit_svg(partition, "shaded").count("<polygon") == partition.card

    def test_shaded_rectangles_rejected(self):
        """Test R_ell partitions cannot be shaded."""
        rectangles = build_partition(make_rotation("sqrt(2), e"), 3, include_diagonals=False)
        with pytest.raises(ValueError):
            emit_svg(rectangles, "shaded")

    def test_unknown_style(self, partition):
        """Test unknown styles are rejected."""
        with pytest.raises(ValueError):
            emit_svg(partition, "dots")


class TestCodingColor:
    """Test fill colors derived from codings."""

    def test_stable_hex(self):
        """Test colors are stable hex triples."""
        color = coding_color("0110")
        assert re.fullmatch(r"#[0-9a-f]{6}", color)
        assert color == coding_color("0110")

    def test_distinct_words(self):
        """Test different words usually get different colors."""
        colors = {coding_color(format(n, "08b")) for n in range(64)}
        assert len(colors) > 32
