"""Deterministic CSV emission: header row, 17 significant digits, LF line endings."""

from __future__ import annotations

import csv
import hashlib
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .density import DensityMatrix
from .waves import WaveMode


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == 0:
            return "0"  # folds -0.0
        return f"{v:.17g}"
    return str(v)


def render(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write and return the sha256 of the file body."""
    text = render(header, rows)
    Path(path).write_text(text, encoding="utf-8", newline="")
    return hashlib.sha256(text.encode()).hexdigest()


def wave_rows(mode: WaveMode):
    v = mode.values
    return zip(mode.grid.x, v.real, v.imag, np.abs(v) ** 2)


WAVE_HEADER = ("x", "re", "im", "abs2")


def density_rows(rho: DensityMatrix):
    for i, bi in enumerate(rho.basis):
        for j, bj in enumerate(rho.basis):
            z = rho.rho[i, j]
            yield bi, bj, z.real, z.imag


DENSITY_HEADER = ("row", "col", "re", "im")
