"""Tests for artifact rendering and atomic commits."""

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import pytest

from src.cocycle_lab.utils.artifacts import (
    ArtifactWriter,
    format_number,
    normalize,
    render_csv,
    render_json,
)

HEADER = {"version": "0.1.0", "command": "cf", "seed": 1}


@dataclass
class Sample:
    value: float
    hidden: list = field(default_factory=list, metadata={"report": False})


class TestFormatting:
    """Test number formatting and normalization."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (3, "3"),
            (np.int64(-4), "-4"),
            (True, "true"),
            (0.1 + 0.2, "0.3"),
            (float("inf"), "inf"),
            (float("nan"), "nan"),
        ],
    )
    def test_format_number(self, value, expected):
        """Test significant-digit rendering."""
        assert format_number(value) == expected

    def test_normalize_nested(self):
        """Test arrays, fractions and complex numbers become plain JSON."""
        value = {"a": np.array([1.0, 2.5]), "f": Fraction(1, 3), "z": 1 + 2j}
        assert normalize(value) == {"a": [1.0, 2.5], "f": "1/3", "z": [1.0, 2.0]}

    def test_hidden_fields(self):
        """Test dataclass fields marked hidden are omitted."""
        assert normalize(Sample(0.5, [1, 2])) == {"value": 0.5}

    def test_digits(self):
        """Test floats are rounded to the requested digits."""
        assert normalize(1 / 3, digits=4) == 0.3333


class TestRendering:
    """Test JSON and CSV documents."""

    def test_json_sorted(self):
        """Test JSON documents carry the run header and sorted keys."""
        text = render_json(HEADER, {"b": 1, "a": 2})
        document = json.loads(text)
        assert document["run"] == HEADER
        assert list(document["report"]) == ["a", "b"]
        assert text.endswith("\n")

    def test_csv_header_line(self):
        """Test CSV starts with a run comment and uses CRLF rows."""
        text = render_csv(HEADER, ["n", "value"], [[1, 0.5], [2, "x"]])
        lines = text.split("\r\n")
        assert lines[0].startswith("# run: ")
        assert json.loads(lines[0][len("# run: ") :]) == HEADER
        assert lines[1] == "n,value"
        assert lines[2] == "1,0.5"
        assert lines[3] == "2,x"


class TestArtifactWriter:
    """Test staging, commit and discard."""

    def test_nothing_written_before_commit(self, tmp_path):
        """Test staged artifacts stay in memory."""
        writer = ArtifactWriter(tmp_path / "out", HEADER)
        target = writer.add_json("report.json", {"x": 1})
        assert target == tmp_path / "out" / "report.json"
        assert not target.exists()
        assert writer.staged == [target]

    def test_commit(self, tmp_path):
        """Test commit writes every file and leaves no temporaries."""
        writer = ArtifactWriter(tmp_path, HEADER)
        writer.add_json("b.json", {"x": 1})
        writer.add_csv("a.csv", ["n"], [[1]])
        writer.add_text("nested/c.txt", "hello")
        written = writer.commit()
        assert written == sorted(written)
        assert (tmp_path / "nested" / "c.txt").read_text() == "hello"
        assert json.loads((tmp_path / "b.json").read_text())["report"] == {"x": 1}
        assert not list(tmp_path.rglob("*.tmp"))
        assert writer.staged == []

    def test_discard(self, tmp_path):
        """Test discarded artifacts never reach disk."""
        writer = ArtifactWriter(tmp_path, HEADER)
        writer.add_json("report.json", {"x": 1})
        writer.discard()
        assert writer.commit() == []
        assert not (tmp_path / "report.json").exists()

    def test_deterministic(self, tmp_path):
        """Test equal inputs give byte-identical files."""
        for name in ("one", "two"):
            writer = ArtifactWriter(tmp_path / name, HEADER)
            writer.add_json("r.json", {"values": [0.1, 0.2], "label": "golden"})
            writer.commit()
        first = (tmp_path / "one" / "r.json").read_bytes()
        assert first == (tmp_path / "two" / "r.json").read_bytes()

    def test_absolute_path_kept(self, tmp_path):
        """Test absolute names bypass the output directory."""
        writer = ArtifactWriter(tmp_path / "out", HEADER)
        target = writer.add_text(tmp_path / "plot.svg", "<svg/>")
        assert target == tmp_path / "plot.svg"
        assert writer.content(target) == "<svg/>"

    def test_failed_write_cleans_up(self, tmp_path, mocker):
        """Test a failing rename leaves no temporary file behind."""
        writer = ArtifactWriter(tmp_path, HEADER)
        writer.add_text("a.txt", "x")
        mocker.patch(
            "src.cocycle_lab.utils.artifacts.os.replace", side_effect=OSError("disk full")
        )
        with pytest.raises(OSError):
            writer.commit()
        assert list(tmp_path.iterdir()) == []
