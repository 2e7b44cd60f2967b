"""CSV interchange: '#' comment lines, optional header, 17-digit floats."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from . import __version__


class CsvFormatError(ValueError):
    pass


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _parse(cell: str, path, lineno: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise CsvFormatError(f"{path}:{lineno}: cannot parse {cell.strip()!r} as a number") from None
    if not math.isfinite(v):
        raise CsvFormatError(f"{path}:{lineno}: non-finite value {cell.strip()!r}")
    return v


def read_signal_csv(path, column: str | None = None, min_length: int = 2) -> np.ndarray:
    """Read a vector from a CSV file.

    Accepted layouts: one value per line; ``index,value`` rows; or any table
    with a header row, from which ``column`` (default: the last column) is
    taken.  Lines starting with '#' and blank cells at the end of a column
    are skipped.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc.strerror or exc}") from None

    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        rows.append((lineno, next(csv.reader([line]))))
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")

    header = None
    first = rows[0][1]
    try:
        [float(c) for c in first]
    except ValueError:
        header = [c.strip() for c in first]
        rows = rows[1:]

    if header is not None:
        if column is None:
            col = len(header) - 1
        elif column in header:
            col = header.index(column)
        else:
            raise CsvFormatError(f"{path}: no column {column!r} in header {header}")
    elif column is not None:
        raise CsvFormatError(f"{path}: column {column!r} requested but the file has no header")
    else:
        col = None

    values = []
    for lineno, cells in rows:
        if col is None:
            if len(cells) not in (1, 2):
                raise CsvFormatError(f"{path}:{lineno}: expected 1 or 2 columns, got {len(cells)}")
            cell = cells[-1]
        else:
            if col >= len(cells):
                raise CsvFormatError(f"{path}:{lineno}: missing column {col + 1}")
            cell = cells[col]
        if not cell.strip():
            values.append(None)
            continue
        values.append(_parse(cell, path, lineno))
    while values and values[-1] is None:
        values.pop()
    if any(v is None for v in values):
        raise CsvFormatError(f"{path}: empty cell inside the data column")
    if len(values) < min_length:
        raise CsvFormatError(f"{path}: need at least {min_length} values, got {len(values)}")
    return np.array(values, dtype=float)


def comment_block(command: str, settings: dict, seed=None) -> list[str]:
    lines = [f"# mmtv {__version__}", f"# command: {command}", f"# seed: {fmt(seed) or 'none'}"]
    lines += [f"# {k}={fmt(v)}" for k, v in settings.items()]
    return lines


def table(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_table(path, comments, header, rows, trailer=()) -> None:
    body = "\n".join(comments) + "\n" + table(header, rows)
    if trailer:
        body += "\n".join(trailer) + "\n"
    Path(path).write_text(body)
