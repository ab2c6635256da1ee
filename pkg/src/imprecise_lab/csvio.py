"""Versioned CSV output shared by the library and the command line."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA = 1


def header_line() -> str:
    return f"# imprecise-lab v{__version__} schema={SCHEMA}"


def write_csv(path, columns: list[str], data: list[np.ndarray], fmts: list[str]) -> Path:
    """Write equal-length columns with a schema comment and a name row.

    Floats should use ``"%.17g"`` so values round-trip and reruns are
    byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lengths = {len(c) for c in data}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    nrows = lengths.pop() if lengths else 0
    buf = io.StringIO()
    buf.write(header_line() + "\n")
    buf.write(",".join(columns) + "\n")
    if nrows:
        # object array keeps integer columns exact next to float columns
        rows = np.empty((nrows, len(columns)), dtype=object)
        for j, c in enumerate(data):
            rows[:, j] = np.asarray(c).tolist()
        np.savetxt(buf, rows, fmt=fmts, delimiter=",")
    path.write_text(buf.getvalue())
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a file written by :func:`write_csv`; returns (columns, float array)."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# imprecise-lab"):
            raise ValueError(f"{path}: missing schema header")
        columns = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = np.zeros((0, len(columns)))
    return columns, data
