"""Portable graymap (PGM) reading and writing.

Writes ASCII P2 for diffability; reads both P2 and binary P5 with maxval
up to 65535. Values are returned as a float grid in [0, 1].
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_pgm(path, grid: np.ndarray, maxval: int = 255):
    """Write an integer grid (values in [0, maxval]) as ASCII P2."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError(f"PGM grid must be 2-D, got shape {grid.shape}")
    h, w = grid.shape
    lines = [f"P2", f"{w} {h}", str(maxval)]
    for row in grid.astype(np.int64):
        lines.append(" ".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    """Read a P2/P5 graymap; returns floats scaled to [0, 1]."""
    blob = Path(path).read_bytes()
    if blob[:2] not in (b"P2", b"P5"):
        raise OSError(f"{path}: not a P2/P5 graymap")
    binary = blob[:2] == b"P5"

    # header tokens: magic, width, height, maxval; '#' starts a comment
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise OSError(f"{path}: truncated PGM header")
        tokens.append(blob[start:pos])
    w, h, maxval = (int(t) for t in tokens)
    if maxval <= 0:
        raise OSError(f"{path}: bad maxval {maxval}")

    if binary:
        pos += 1  # single whitespace after maxval
        dtype = ">u2" if maxval > 255 else np.uint8
        data = np.frombuffer(blob, dtype=dtype, count=w * h, offset=pos)
    else:
        data = np.array(blob[pos:].split(), dtype=np.float64)
        if data.size != w * h:
            raise OSError(f"{path}: expected {w * h} samples, found {data.size}")
    return data.reshape(h, w).astype(np.float64) / maxval
