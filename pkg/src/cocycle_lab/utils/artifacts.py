"""Deterministic, atomically written run artifacts.

Artifacts are staged in memory while a command runs and only reach their
final paths once the command has succeeded; each file is written to a
temporary sibling and renamed into place.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
from mpmath import mpf

from .logging import get_logger

logger = get_logger(__name__)


def format_number(value: Any, digits: int = 15) -> str:
    """Render a number with a fixed count of significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    number = float(value)
    if math.isnan(number):
        return "nan"
    if math.isinf(number):
        return "inf" if number > 0 else "-inf"
    return f"{number:.{digits}g}"


def normalize(value: Any, digits: int = 15) -> Any:
    """Convert a report value into plain JSON types with rounded floats."""
    to_dict = getattr(value, "to_dict", None)
    if callable(to_dict):
        return normalize(to_dict(), digits)
    if isinstance(value, Mapping):
        return {str(k): normalize(v, digits) for k, v in value.items()}
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            f.name: normalize(getattr(value, f.name), digits)
            for f in dataclasses.fields(value)
            if f.metadata.get("report", True)
        }
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [normalize(value.real, digits), normalize(value.imag, digits)]
    if isinstance(value, (float, np.floating, mpf)):
        number = float(value)
        if not math.isfinite(number):
            return format_number(number)
        return float(f"{number:.{digits}g}")
    if isinstance(value, np.ndarray):
        return [normalize(v, digits) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [normalize(v, digits) for v in value]
    if value is None or isinstance(value, str):
        return value
    return str(value)


def render_json(header: Mapping[str, Any], report: Any, digits: int = 15) -> str:
    document = {"run": normalize(header, digits), "report": normalize(report, digits)}
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_csv(
    header: Mapping[str, Any],
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    digits: int = 15,
) -> str:
    """RFC-4180 CSV preceded by a single ``# run:`` comment line."""
    buffer = io.StringIO()
    run_line = json.dumps(normalize(header, digits), sort_keys=True)
    buffer.write(f"# run: {run_line}\r\n")
    writer = csv.writer(buffer)
    writer.writerow(columns)
    for row in rows:
        writer.writerow(
            [
                cell if isinstance(cell, str) else format_number(cell, digits)
                for cell in row
            ]
        )
    return buffer.getvalue()


class ArtifactWriter:
    """Stage artifacts in memory and commit them atomically."""

    def __init__(
        self, directory: str | Path, header: Mapping[str, Any], digits: int = 15
    ) -> None:
        self.directory = Path(directory)
        self.header = dict(header)
        self.digits = digits
        self._staged: dict[Path, str] = {}

    def _target(self, name: str | Path) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.directory / path

    def add_json(self, name: str | Path, report: Any) -> Path:
        target = self._target(name)
        self._staged[target] = render_json(self.header, report, self.digits)
        return target

    def add_csv(
        self,
        name: str | Path,
        columns: Sequence[str],
        rows: Iterable[Sequence[Any]],
    ) -> Path:
        target = self._target(name)
        self._staged[target] = render_csv(self.header, columns, rows, self.digits)
        return target

    def add_text(self, name: str | Path, text: str) -> Path:
        target = self._target(name)
        self._staged[target] = text
        return target

    @property
    def staged(self) -> list[Path]:
        return sorted(self._staged)

    def content(self, name: str | Path) -> str:
        return self._staged[self._target(name)]

    def discard(self) -> None:
        self._staged.clear()

    def commit(self) -> list[Path]:
        """Write every staged artifact through a temporary file and rename.

        Returns:
            Final paths, sorted.
        """
        written: list[Path] = []
        for target in sorted(self._staged):
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(
                prefix=f".{target.name}.", suffix=".tmp", dir=target.parent
            )
            try:
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                    f.write(self._staged[target])
                    f.flush()
                    os.fsync(f.fileno())
                os.replace(tmp_name, target)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
            logger.debug(f"Wrote artifact {target}")
            written.append(target)
        self._staged.clear()
        return written
