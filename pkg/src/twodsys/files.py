"""Time-series CSV and minimal SVG line charts."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .gp import TimeSeries

__all__ = ["read_timeseries", "write_csv", "write_svg_line", "parse_grid"]


def read_timeseries(path) -> TimeSeries:
    """Read a two-column ``t,x`` CSV with a header row.

    Errors name the offending line (1-based, header is line 1).
    """
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"{path}: cannot open ({exc.strerror})") from exc
    times, values = [], []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InvalidInputError(f"{path}: empty file, expected header 't,x'")
        if [h.strip() for h in header] != ["t", "x"]:
            raise InvalidInputError(f"{path}:1: expected header 't,x', got {','.join(header)!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise InvalidInputError(f"{path}:{line}: expected 2 columns, got {len(row)}")
            try:
                t, x = float(row[0]), float(row[1])
            except ValueError:
                raise InvalidInputError(f"{path}:{line}: non-numeric value in {row!r}") from None
            if not (math.isfinite(t) and math.isfinite(x)):
                raise InvalidInputError(f"{path}:{line}: non-finite value in {row!r}")
            if times and t <= times[-1]:
                raise InvalidInputError(f"{path}:{line}: times must be strictly increasing")
            times.append(t)
            values.append(x)
    if not times:
        raise InvalidInputError(f"{path}: no data rows")
    return TimeSeries(np.array(times), np.array(values))


def write_csv(path_or_file, header, columns):
    """Write equal-length columns under ``header``; ``path_or_file`` may be a stream."""
    rows = zip(*(np.asarray(c).tolist() for c in columns))
    if hasattr(path_or_file, "write"):
        w = csv.writer(path_or_file, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_svg_line(path, x, y, title="", width=320, height=200, pad=24):
    """Static polyline chart of ``y`` against ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    if x1 == x0:
        x1 = x0 + 1
    px = pad + (x - x0) / (x1 - x0) * (width - 2 * pad)
    py = height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)
    points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    zero = ""
    if y0 < 0 < y1:
        zy = height - pad - (0 - y0) / (y1 - y0) * (height - 2 * pad)
        zero = (f'<line x1="{pad}" y1="{zy:.2f}" x2="{width - pad}" y2="{zy:.2f}" '
                f'stroke="#bbb" stroke-width="0.5"/>')
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n'
        f'{zero}\n'
        f'<polyline fill="none" stroke="#1f4e9c" stroke-width="0.8" points="{points}"/>\n'
        f'<text x="{pad}" y="{pad - 8}" font-family="sans-serif" font-size="11">{title}</text>\n'
        f'</svg>\n'
    )
    Path(path).write_text(svg, encoding="utf-8")


def parse_grid(spec: str) -> np.ndarray:
    """Parse ``start:step:end`` (end inclusive) into an array."""
    try:
        start, step, end = (float(v) for v in spec.split(":"))
    except ValueError:
        raise InvalidInputError(f"grid must be start:step:end, got {spec!r}") from None
    if not (step > 0 and end >= start):
        raise InvalidInputError(f"grid needs step > 0 and end >= start, got {spec!r}")
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)
