"""Field serialization: plain-text matrices and 16-bit binary PGM (P5).

The PGM path affinely rescales values to the full 16-bit range and records
the original (min, max) in a sidecar text file next to the image so the
field can be reconstructed.
"""

from __future__ import annotations

import os

import numpy as np

from .grid import GridField


def save_text(field: GridField, path, header: dict | None = None) -> None:
    lines = []
    if header:
        lines.extend(f"# {k}={v}" for k, v in sorted(header.items()))
    for row in field.values:
        lines.append(" ".join(f"{x:.17g}" for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_text(path) -> GridField:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(tok) for tok in line.split()])
    if not rows:
        raise ValueError(f"no data rows in {path}")
    return GridField(np.array(rows))


def _sidecar(path) -> str:
    return os.fspath(path) + ".minmax.txt"


def save_pgm(field: GridField, path) -> None:
    vals = field.values
    lo = float(vals.min())
    hi = float(vals.max())
    span = hi - lo
    if span > 0:
        scaled = np.round((vals - lo) / span * 65535.0).astype(">u2")
    else:
        scaled = np.zeros(vals.shape, dtype=">u2")
    rows, cols = vals.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(scaled.tobytes())
    with open(_sidecar(path), "w") as fh:
        fh.write(f"min={lo:.17g}\nmax={hi:.17g}\n")


def load_pgm(path) -> GridField:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{path}: not a binary PGM (P5) file")
        dims = fh.readline().split()
        cols, rows = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        data = np.frombuffer(fh.read(rows * cols * 2), dtype=">u2")
    scaled = data.astype(np.float64).reshape(rows, cols) / maxval
    lo = hi = None
    with open(_sidecar(path)) as fh:
        for line in fh:
            key, _, val = line.partition("=")
            if key.strip() == "min":
                lo = float(val)
            elif key.strip() == "max":
                hi = float(val)
    if lo is None or hi is None:
        raise ValueError(f"{_sidecar(path)}: missing min/max")
    return GridField(scaled * (hi - lo) + lo)
