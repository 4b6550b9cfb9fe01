"""Delimited on-disk form of simulation traces.

Layout: optional ``# key = value`` comment lines carrying run metadata, one
header row naming the columns, then one comma-separated numeric row per
sample. Floats are rendered with ``repr``, so parsing a written file
reproduces every value bit for bit. The zero-order-hold diagnostic arrays
never leave memory; only the eleven schema columns are stored.
"""

from __future__ import annotations

import os

import numpy as np

from .engine import TRACE_COLUMNS, Trace
from .errors import TraceFormatError

__all__ = ["parse_trace", "read_trace", "render_trace", "write_trace"]

_HEADER = ",".join(TRACE_COLUMNS)

# metadata comment keys, in render order
_META = ("scheme", "f_edge", "f_high", "wall_position")


def render_trace(trace: Trace) -> str:
    """Serialize a trace to delimited text."""
    lines = []
    for key in _META:
        value = getattr(trace, key)
        if key == "wall_position" and value is None:
            continue
        lines.append(f"# {key} = {value!r}" if key != "scheme" else f"# scheme = {value}")
    lines.append(_HEADER)
    columns = [getattr(trace, name) for name in TRACE_COLUMNS]
    for row in zip(*columns):
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    """Inverse of :func:`render_trace`; exact for every numeric value."""
    meta = {"scheme": "", "f_edge": 0.0, "f_high": 0.0, "wall_position": None}
    rows = []
    header_seen = False
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if header_seen:
                raise TraceFormatError("comment after the header", line_no)
            key, sep, value = line[1:].partition("=")
            key = key.strip()
            if not sep or key not in _META:
                raise TraceFormatError(f"unknown metadata line {line!r}", line_no)
            try:
                meta[key] = value.strip() if key == "scheme" else float(value)
            except ValueError:
                raise TraceFormatError(
                    f"bad metadata value for {key}: {value.strip()!r}", line_no
                ) from None
            continue
        if not header_seen:
            if line != _HEADER:
                raise TraceFormatError(
                    f"header must be exactly {_HEADER!r}, got {line!r}", line_no
                )
            header_seen = True
            continue
        cells = line.split(",")
        if len(cells) != len(TRACE_COLUMNS):
            raise TraceFormatError(
                f"expected {len(TRACE_COLUMNS)} cells, got {len(cells)}", line_no
            )
        try:
            rows.append([float(cell) for cell in cells])
        except ValueError as exc:
            raise TraceFormatError(str(exc), line_no) from None
    if not header_seen:
        raise TraceFormatError("missing header row")
    data = (
        np.asarray(rows, dtype=float).T
        if rows
        else np.zeros((len(TRACE_COLUMNS), 0))
    )
    return Trace(
        **{name: data[i] for i, name in enumerate(TRACE_COLUMNS)},
        **meta,
    )


def write_trace(trace: Trace, path: str | os.PathLike) -> None:
    """Write a trace file; bytes depend only on the trace contents."""
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write(render_trace(trace))


def read_trace(path: str | os.PathLike) -> Trace:
    with open(path, "r", encoding="ascii", newline="") as handle:
        return parse_trace(handle.read())
